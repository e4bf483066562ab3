#pragma once

/// @file fitness.hpp
/// @brief LeadingOnes and the SelPres objective.
///
/// SelPres returns 2n on its optimal set and LeadingOnes everywhere else. A
/// string is optimal when
///   (a) positions 1 .. k+3 are all 0,
///   (b) positions k+4 .. floor((sigma-delta)n)-1 are all 1, and
///   (c) at most 2/3 of positions floor((sigma+delta)n) .. floor((sigma+2delta)n)-1 are 1.
/// Remaining positions are free.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "core.hpp"

namespace mutsel {

using Fitness = std::int64_t;

/// Inclusive 1-based position range.
struct Window {
    std::size_t first = 1;
    std::size_t last = 0;

    [[nodiscard]] std::size_t length() const noexcept { return last >= first ? last - first + 1 : 0; }
    friend bool operator==(const Window&, const Window&) = default;
};

namespace detail {

/// floor(c * n) for a constant c, tolerant of representation error in c
/// (0.55 * 60 must give 33).
inline std::size_t floor_product(double c, std::size_t n) {
    return static_cast<std::size_t>(std::floor(c * static_cast<double>(n) + 1e-9));
}

} // namespace detail

/// The three constrained windows of the SelPres optimal set for a fixed n.
struct SelPresWindows {
    Window zeros;
    Window ones;
    Window sparse;

    SelPresWindows(const SelPresParams& p, std::size_t n) {
        const auto k = static_cast<std::size_t>(p.k());
        const std::size_t ones_end = detail::floor_product(p.sigma() - p.delta(), n);
        const std::size_t sparse_begin = detail::floor_product(p.sigma() + p.delta(), n);
        const std::size_t sparse_end = detail::floor_product(p.sigma() + 2.0 * p.delta(), n);
        zeros = {1, k + 3};
        ones = {k + 4, ones_end >= 1 ? ones_end - 1 : 0};
        sparse = {sparse_begin, sparse_end >= 1 ? sparse_end - 1 : 0};

        const auto where = [&] {
            return " (n=" + std::to_string(n) + ", σ=" + std::to_string(p.sigma()) +
                   ", δ=" + std::to_string(p.delta()) + ", k=" + std::to_string(p.k()) + ")";
        };
        if (ones.last < ones.first) {
            throw DomainError("n too small: 1-block window [k+4, ⌊(σ−δ)n⌋−1] is empty" + where());
        }
        if (sparse.last < sparse.first || sparse.first <= ones.last) {
            throw DomainError("n too small: sparse window is empty or overlaps the 1-block" + where());
        }
        if (sparse.last > n) {
            throw DomainError("sparse window exceeds the string length" + where());
        }
    }
};

inline std::size_t leading_ones(const Bitstring& x) noexcept { return x.leading_ones(); }

/// Number of 1-bits among positions 1..m.
inline std::size_t prefix_sum(const Bitstring& x, std::size_t m) {
    if (m < 1 || m > x.size()) {
        throw std::out_of_range("prefix length " + std::to_string(m) + " outside [1, " +
                                std::to_string(x.size()) + "]");
    }
    return x.count_range(1, m);
}

inline bool is_optimal(const Bitstring& x, const SelPresWindows& w) {
    if (w.sparse.last > x.size()) {
        throw DomainError("SelPres windows do not fit the string length");
    }
    if (x.count_range(w.zeros.first, w.zeros.last) != 0) {
        return false;
    }
    if (x.count_range(w.ones.first, w.ones.last) != w.ones.length()) {
        return false;
    }
    return 3 * x.count_range(w.sparse.first, w.sparse.last) <= 2 * w.sparse.length();
}

inline bool is_optimal(const Bitstring& x, const SelPresParams& p) {
    return is_optimal(x, SelPresWindows(p, x.size()));
}

inline Fitness selpres(const Bitstring& x, const SelPresWindows& w) {
    if (is_optimal(x, w)) {
        return 2 * static_cast<Fitness>(x.size());
    }
    return static_cast<Fitness>(x.leading_ones());
}

inline Fitness selpres(const Bitstring& x, const SelPresParams& p) {
    return selpres(x, SelPresWindows(p, x.size()));
}

/// Objective bound to a genome length: either SelPres or plain LeadingOnes.
///
/// LeadingOnes has no target set here; runs on it always use the full budget,
/// which is what the equilibrium experiments need.
class Objective {
  public:
    static Objective leading_ones(std::size_t n) { return Objective(n, std::nullopt); }
    static Objective selpres(std::size_t n, const SelPresParams& p) { return Objective(n, p); }

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] bool is_selpres() const noexcept { return params_.has_value(); }
    [[nodiscard]] const std::optional<SelPresParams>& params() const noexcept { return params_; }
    [[nodiscard]] const std::optional<SelPresWindows>& windows() const noexcept { return windows_; }

    [[nodiscard]] Fitness evaluate(const Bitstring& x) const {
        return windows_ ? mutsel::selpres(x, *windows_) : static_cast<Fitness>(x.leading_ones());
    }

    [[nodiscard]] bool is_target(const Bitstring& x) const {
        return windows_ ? mutsel::is_optimal(x, *windows_) : false;
    }

    /// Length of the all-ones prefix counted by the 1^{k+3} instrumentation:
    /// k+3 for SelPres, 4 (k = 1) for LeadingOnes.
    [[nodiscard]] std::size_t block_length() const noexcept {
        return params_ ? static_cast<std::size_t>(params_->k()) + 3 : 4;
    }

    [[nodiscard]] std::string name() const { return params_ ? "selpres" : "leading_ones"; }

  private:
    Objective(std::size_t n, std::optional<SelPresParams> p) : n_(n), params_(p) {
        if (params_) {
            windows_.emplace(*params_, n);
        }
    }

    std::size_t n_;
    std::optional<SelPresParams> params_;
    std::optional<SelPresWindows> windows_;
};

} // namespace mutsel
