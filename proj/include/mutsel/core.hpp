#pragma once

/// @file core.hpp
/// @brief Foundational types: packed bitstrings, parameter bundles with
/// validation, and the seedable random source shared by every module.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mutsel {

/// Raised when a precondition on a parameter or input is violated.
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Bitstring
// ---------------------------------------------------------------------------

/// Fixed-length genome stored as packed 64-bit words.
///
/// All public positions are 1-based: bit(1) is the leftmost bit, bit(n) the
/// rightmost. Word k holds positions 64k+1 .. 64k+64 with position 64k+1 in the
/// least significant bit. Bits beyond n in the last word are kept at zero.
class Bitstring {
  public:
    using word_type = std::uint64_t;
    static constexpr std::size_t word_bits = 64;

    explicit Bitstring(std::size_t n) : n_(n), words_((n + word_bits - 1) / word_bits, 0) {
        if (n == 0) {
            throw DomainError("bitstring length must be at least 1");
        }
    }

    static Bitstring zeros(std::size_t n) { return Bitstring(n); }

    static Bitstring ones(std::size_t n) {
        Bitstring x(n);
        std::fill(x.words_.begin(), x.words_.end(), ~word_type{0});
        x.clear_tail();
        return x;
    }

    /// Parses a string of '0'/'1' characters; spaces and underscores are ignored.
    static Bitstring from_string(std::string_view text) {
        std::size_t n = 0;
        for (char c : text) {
            if (c == '0' || c == '1') {
                ++n;
            } else if (c != ' ' && c != '_') {
                throw DomainError("bitstring literal may contain only '0', '1', ' ' and '_'");
            }
        }
        Bitstring x(n);
        std::size_t pos = 1;
        for (char c : text) {
            if (c == '0' || c == '1') {
                x.set(pos++, c == '1');
            }
        }
        return x;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    [[nodiscard]] bool bit(std::size_t pos) const {
        check_pos(pos);
        const std::size_t i = pos - 1;
        return (words_[i / word_bits] >> (i % word_bits)) & 1U;
    }

    void set(std::size_t pos, bool value) {
        check_pos(pos);
        const std::size_t i = pos - 1;
        const word_type mask = word_type{1} << (i % word_bits);
        if (value) {
            words_[i / word_bits] |= mask;
        } else {
            words_[i / word_bits] &= ~mask;
        }
    }

    void flip(std::size_t pos) {
        check_pos(pos);
        const std::size_t i = pos - 1;
        words_[i / word_bits] ^= word_type{1} << (i % word_bits);
    }

    /// Unchecked 0-based flip for hot loops.
    void flip_index(std::size_t i) noexcept { words_[i / word_bits] ^= word_type{1} << (i % word_bits); }

    void complement() noexcept {
        for (auto& w : words_) {
            w = ~w;
        }
        clear_tail();
    }

    [[nodiscard]] std::size_t count() const noexcept {
        std::size_t c = 0;
        for (auto w : words_) {
            c += static_cast<std::size_t>(std::popcount(w));
        }
        return c;
    }

    /// Number of 1-bits in positions first..last (1-based, inclusive).
    /// An empty range (last < first) counts zero.
    [[nodiscard]] std::size_t count_range(std::size_t first, std::size_t last) const {
        if (last < first) {
            return 0;
        }
        check_pos(first);
        check_pos(last);
        const std::size_t lo = first - 1;
        const std::size_t hi = last; // exclusive, 0-based
        const std::size_t wlo = lo / word_bits;
        const std::size_t whi = (hi - 1) / word_bits;
        std::size_t c = 0;
        for (std::size_t w = wlo; w <= whi; ++w) {
            word_type word = words_[w];
            if (w == wlo) {
                word &= ~word_type{0} << (lo % word_bits);
            }
            if (w == whi && hi % word_bits != 0) {
                word &= ~word_type{0} >> (word_bits - hi % word_bits);
            }
            c += static_cast<std::size_t>(std::popcount(word));
        }
        return c;
    }

    /// Length of the maximal all-ones prefix.
    [[nodiscard]] std::size_t leading_ones() const noexcept {
        std::size_t total = 0;
        for (auto w : words_) {
            const auto run = static_cast<std::size_t>(std::countr_one(w));
            total += run;
            if (run < word_bits) {
                break;
            }
        }
        return std::min(total, n_);
    }

    /// ‖x‖: fraction of 1-bits.
    [[nodiscard]] double fraction_ones() const noexcept {
        return static_cast<double>(count()) / static_cast<double>(n_);
    }

    [[nodiscard]] std::size_t hamming_distance(const Bitstring& other) const {
        if (other.n_ != n_) {
            throw DomainError("hamming distance requires equal lengths");
        }
        std::size_t d = 0;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            d += static_cast<std::size_t>(std::popcount(words_[w] ^ other.words_[w]));
        }
        return d;
    }

    [[nodiscard]] const std::vector<word_type>& words() const noexcept { return words_; }
    std::vector<word_type>& mutable_words() noexcept { return words_; }

    /// Zeroes the unused high bits of the last word. Callers writing through
    /// mutable_words() must invoke this afterwards.
    void clear_tail() noexcept {
        const std::size_t rem = n_ % word_bits;
        if (rem != 0) {
            words_.back() &= ~word_type{0} >> (word_bits - rem);
        }
    }

    [[nodiscard]] std::string to_string() const {
        std::string s(n_, '0');
        for (std::size_t i = 0; i < n_; ++i) {
            if ((words_[i / word_bits] >> (i % word_bits)) & 1U) {
                s[i] = '1';
            }
        }
        return s;
    }

    friend bool operator==(const Bitstring&, const Bitstring&) = default;

  private:
    void check_pos(std::size_t pos) const {
        if (pos < 1 || pos > n_) {
            throw std::out_of_range("bit position " + std::to_string(pos) + " outside [1, " +
                                    std::to_string(n_) + "]");
        }
    }

    std::size_t n_;
    std::vector<word_type> words_;
};

// ---------------------------------------------------------------------------
// Parameter bundles
// ---------------------------------------------------------------------------

/// Linear ranking selection pressure, 1 < eta <= 2.
class RankingParams {
  public:
    explicit RankingParams(double eta) : eta_(eta) {
        if (!(eta > 1.0 && eta <= 2.0)) {
            throw DomainError("η must satisfy 1 < η ≤ 2");
        }
    }
    [[nodiscard]] double eta() const noexcept { return eta_; }

  private:
    double eta_;
};

/// Mutation parameter chi; per-bit flip probability is chi/n.
class MutationParams {
  public:
    explicit MutationParams(double chi) : chi_(chi) {
        if (!(chi > 0.0) || !std::isfinite(chi)) {
            throw DomainError("χ must be positive");
        }
    }
    [[nodiscard]] double chi() const noexcept { return chi_; }
    [[nodiscard]] double rate(std::size_t n) const noexcept { return chi_ / static_cast<double>(n); }

  private:
    double chi_;
};

/// SelPres constants: 0 < delta < sigma < 1 - 3 delta, k >= 1.
class SelPresParams {
  public:
    SelPresParams(double sigma, double delta, int k) : sigma_(sigma), delta_(delta), k_(k) {
        if (!(delta > 0.0 && delta < sigma && sigma < 1.0 - 3.0 * delta)) {
            throw DomainError("SelPres parameters must satisfy 0 < δ < σ < 1 − 3δ");
        }
        if (k < 1) {
            throw DomainError("SelPres parameter k must be at least 1");
        }
    }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] int k() const noexcept { return k_; }

    friend bool operator==(const SelPresParams&, const SelPresParams&) = default;

  private:
    double sigma_;
    double delta_;
    int k_;
};

/// Raw EA configuration. Use check_config / validate_config before running.
struct EaConfig {
    std::size_t n = 100;
    std::size_t lambda = 100;
    double eta = 1.5;
    double chi = 1.0;
    std::uint64_t budget_evaluations = 1'000'000;
    std::uint64_t seed = 0;

    [[nodiscard]] RankingParams ranking() const { return RankingParams(eta); }
    [[nodiscard]] MutationParams mutation() const { return MutationParams(chi); }

    friend bool operator==(const EaConfig&, const EaConfig&) = default;
};

struct ConfigViolation {
    std::string field;
    std::string message;
};

/// Carries every violated constraint of a configuration.
class ConfigError : public DomainError {
  public:
    explicit ConfigError(std::vector<ConfigViolation> violations)
        : DomainError(render(violations)), violations_(std::move(violations)) {}

    [[nodiscard]] const std::vector<ConfigViolation>& violations() const noexcept { return violations_; }

  private:
    static std::string render(const std::vector<ConfigViolation>& v) {
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& e : v) {
            os << " [" << e.field << "] " << e.message << ";";
        }
        return os.str();
    }

    std::vector<ConfigViolation> violations_;
};

/// Returns every violated constraint; empty when the configuration is valid.
inline std::vector<ConfigViolation> check_config(const EaConfig& c) {
    std::vector<ConfigViolation> out;
    if (c.n < 1) {
        out.push_back({"n", "n must be at least 1"});
    }
    if (c.lambda < 1) {
        out.push_back({"lambda", "λ must be at least 1"});
    }
    if (!(c.eta > 1.0 && c.eta <= 2.0)) {
        out.push_back({"eta", "η must satisfy 1 < η ≤ 2"});
    }
    if (!(c.chi > 0.0) || !std::isfinite(c.chi)) {
        out.push_back({"chi", "χ must be positive"});
    } else if (c.n >= 1 && c.chi / static_cast<double>(c.n) > 1.0) {
        out.push_back({"chi", "χ/n must not exceed 1"});
    }
    if (c.budget_evaluations < c.lambda) {
        out.push_back({"budget_evaluations", "budget must be at least λ evaluations"});
    }
    return out;
}

/// Returns the configuration unchanged, or throws ConfigError listing all violations.
inline EaConfig validate_config(const EaConfig& c) {
    auto violations = check_config(c);
    if (!violations.empty()) {
        throw ConfigError(std::move(violations));
    }
    return c;
}

// ---------------------------------------------------------------------------
// RandomSource
// ---------------------------------------------------------------------------

namespace detail {

constexpr std::uint64_t splitmix64_step(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    std::uint64_t s = x;
    return splitmix64_step(s);
}

} // namespace detail

/// xoshiro256** generator. Streams are keyed by (seed, stream_index): both are
/// hashed through SplitMix64 and the result seeds the 256-bit state through a
/// further SplitMix64 sequence.
///
/// Satisfies UniformRandomBitGenerator so it can drive <random> distributions,
/// although every draw used by this library goes through the member functions
/// below so results do not depend on the standard library implementation.
class RandomSource {
  public:
    using result_type = std::uint64_t;

    explicit RandomSource(std::uint64_t seed) : RandomSource(seed, 0) {}

    RandomSource(std::uint64_t seed, std::uint64_t stream_index) {
        std::uint64_t key = detail::mix64(detail::mix64(seed) ^ detail::mix64(~stream_index));
        for (auto& s : state_) {
            s = detail::splitmix64_step(key);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }

    std::uint64_t next() noexcept {
        const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = std::rotl(state_[3], 45);
        return result;
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform real in (0, 1].
    double uniform_open_zero() noexcept { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) via Lemire's multiply-shift rejection.
    std::uint64_t uniform_int(std::uint64_t bound) {
        if (bound == 0) {
            throw DomainError("uniform_int bound must be positive");
        }
        __uint128_t m = static_cast<__uint128_t>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<__uint128_t>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Poisson variate. Inversion for small means, PTRS transformed rejection
    /// (Hörmann 1993) otherwise.
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean)) {
            throw DomainError("poisson mean must be finite and non-negative");
        }
        if (mean == 0.0) {
            return 0;
        }
        if (mean < 10.0) {
            const double limit = std::exp(-mean);
            double prod = uniform_open_zero();
            std::uint64_t k = 0;
            while (prod > limit) {
                prod *= uniform_open_zero();
                ++k;
            }
            return k;
        }
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform_open_zero();
            const double us = 0.5 - std::fabs(u);
            const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) {
                return static_cast<std::uint64_t>(k);
            }
            if (k < 0.0 || (us < 0.013 && v > us)) {
                continue;
            }
            if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
                -mean + k * loglam - std::lgamma(k + 1.0)) {
                return static_cast<std::uint64_t>(k);
            }
        }
    }

    friend bool operator==(const RandomSource&, const RandomSource&) = default;

  private:
    std::uint64_t state_[4]{};
};

/// Independent generator for the given (seed, stream_index) pair.
inline RandomSource derive_stream(std::uint64_t seed, std::uint64_t stream_index) {
    return RandomSource(seed, stream_index);
}

/// Uniformly random bitstring of length n.
inline Bitstring random_bitstring(std::size_t n, RandomSource& rng) {
    Bitstring x(n);
    for (auto& w : x.mutable_words()) {
        w = rng.next();
    }
    x.clear_tail();
    return x;
}

} // namespace mutsel
