#pragma once

/// @file branching.hpp
/// @brief Single- and multi-type Galton-Watson simulators and the closed-form
/// single-type tail bounds used as their oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "spectral.hpp"

namespace mutsel {

/// Thrown when a simulated generation exceeds the explosion guard.
class PopulationExplosion : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t explosion_guard = 100'000'000;

/// Offspring distribution on the non-negative integers.
class OffspringLaw {
  public:
    struct Poisson {
        double rho;
    };
    /// 0 with probability 1 - rho, 1 with probability rho.
    struct BernoulliPair {
        double rho;
    };
    /// P(xi = i) = probabilities[i].
    struct Table {
        std::vector<double> probabilities;
    };

    static OffspringLaw poisson(double rho) {
        if (!(rho >= 0.0) || !std::isfinite(rho)) {
            throw DomainError("Poisson offspring mean must be finite and non-negative");
        }
        return OffspringLaw(Poisson{rho});
    }

    static OffspringLaw bernoulli(double rho) {
        if (!(rho >= 0.0 && rho <= 1.0)) {
            throw DomainError("Bernoulli offspring probability must lie in [0, 1]");
        }
        return OffspringLaw(BernoulliPair{rho});
    }

    static OffspringLaw table(std::vector<double> probabilities) {
        if (probabilities.empty()) {
            throw DomainError("offspring table must be non-empty");
        }
        double total = 0.0;
        for (double p : probabilities) {
            if (!(p >= 0.0)) {
                throw DomainError("offspring probabilities must be non-negative");
            }
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-12) {
            throw DomainError("offspring probabilities must sum to 1");
        }
        return OffspringLaw(Table{std::move(probabilities)});
    }

    /// Always exactly c offspring.
    static OffspringLaw constant(std::size_t c) {
        std::vector<double> p(c + 1, 0.0);
        p[c] = 1.0;
        return table(std::move(p));
    }

    [[nodiscard]] double mean() const {
        if (const auto* p = std::get_if<Poisson>(&law_)) {
            return p->rho;
        }
        if (const auto* b = std::get_if<BernoulliPair>(&law_)) {
            return b->rho;
        }
        const auto& t = std::get<Table>(law_).probabilities;
        double m = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            m += static_cast<double>(i) * t[i];
        }
        return m;
    }

    /// Total offspring of `parents` independent individuals.
    std::uint64_t sample_total(std::uint64_t parents, RandomSource& rng) const {
        if (parents == 0) {
            return 0;
        }
        if (const auto* p = std::get_if<Poisson>(&law_)) {
            // A sum of independent Poisson variables is Poisson.
            return rng.poisson(p->rho * static_cast<double>(parents));
        }
        if (const auto* b = std::get_if<BernoulliPair>(&law_)) {
            std::uint64_t c = 0;
            for (std::uint64_t i = 0; i < parents; ++i) {
                c += rng.bernoulli(b->rho) ? 1 : 0;
            }
            return c;
        }
        const auto& t = std::get<Table>(law_).probabilities;
        if (t.size() == 1 || (t.size() >= 1 && t.back() == 1.0)) {
            return parents * (t.size() - 1);
        }
        std::uint64_t c = 0;
        for (std::uint64_t i = 0; i < parents; ++i) {
            double u = rng.uniform();
            std::size_t k = 0;
            while (k + 1 < t.size() && u >= t[k]) {
                u -= t[k];
                ++k;
            }
            c += k;
        }
        return c;
    }

    [[nodiscard]] bool is_poisson() const noexcept { return std::holds_alternative<Poisson>(law_); }

  private:
    using Variant = std::variant<Poisson, BernoulliPair, Table>;
    explicit OffspringLaw(Variant v) : law_(std::move(v)) {}
    Variant law_;
};

struct BranchingTrajectory {
    /// Z_0 .. Z_T (stops at the first zero) or Z_0 .. Z_max_t when censored.
    std::vector<std::uint64_t> sizes;
    /// First t with Z_t = 0; empty when the process survives to max_t.
    std::optional<std::uint64_t> extinction_time;
    /// Z_1 + ... + Z_min(T, max_t), an upper bound on the number of lineages.
    std::uint64_t lineage_count = 0;

    [[nodiscard]] std::uint64_t max_width() const {
        return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
    }
    /// Z_t, zero after extinction.
    [[nodiscard]] std::uint64_t size_at(std::size_t t) const { return t < sizes.size() ? sizes[t] : 0; }
};

/// Forward simulation from Z_0 = 1.
inline BranchingTrajectory simulate_single(const OffspringLaw& law, std::uint64_t max_t, RandomSource& rng) {
    if (max_t < 1) {
        throw DomainError("max_t must be at least 1");
    }
    BranchingTrajectory traj;
    traj.sizes.push_back(1);
    std::uint64_t z = 1;
    for (std::uint64_t t = 1; t <= max_t; ++t) {
        z = law.sample_total(z, rng);
        if (z > explosion_guard) {
            throw PopulationExplosion("generation " + std::to_string(t) + " exceeds " +
                                      std::to_string(explosion_guard) + " individuals");
        }
        traj.sizes.push_back(z);
        traj.lineage_count += z;
        if (z == 0) {
            traj.extinction_time = t;
            break;
        }
    }
    return traj;
}

struct Lemma2Bounds {
    double p_zt_ge_k = 0.0;          // rho^t / k
    double p_t_ge_t = 0.0;           // rho^t
    std::optional<double> e_xt;      // rho / (1 - rho), rho < 1 only
    std::optional<double> p_xt_ge_k; // rho / (k (1 - rho)), rho < 1 only
};

/// Closed-form bounds for a single-type process with offspring mean rho.
inline Lemma2Bounds lemma2_bounds(double rho, std::uint64_t t, std::uint64_t k) {
    if (!(rho > 0.0) || t < 1 || k < 1) {
        throw DomainError("bounds require ρ > 0, t ≥ 1 and k ≥ 1");
    }
    Lemma2Bounds b;
    b.p_t_ge_t = std::pow(rho, static_cast<double>(t));
    b.p_zt_ge_k = b.p_t_ge_t / static_cast<double>(k);
    if (rho < 1.0) {
        b.e_xt = rho / (1.0 - rho);
        b.p_xt_ge_k = rho / (static_cast<double>(k) * (1.0 - rho));
    }
    return b;
}

using MultiTypeState = std::vector<std::uint64_t>;

/// Multi-type simulation from Z_0 = e_h.
///
/// Each type-j parent has independent Poisson(m_jk) offspring of type k. By
/// Poisson superposition, Z_{t+1,k} ~ Poisson(sum_j Z_{t,j} m_jk), which is
/// what is sampled. The trajectory ends at extinction or after max_t steps.
inline std::vector<MultiTypeState> simulate_multitype(const MeanMatrix& m, std::size_t h, std::uint64_t max_t,
                                                      RandomSource& rng) {
    const std::size_t d = m.dimension();
    if (h < 1 || h > d) {
        throw DomainError("start type h outside [1, d]");
    }
    if (max_t < 1) {
        throw DomainError("max_t must be at least 1");
    }
    std::vector<MultiTypeState> traj;
    MultiTypeState z(d, 0);
    z[h - 1] = 1;
    traj.push_back(z);
    const auto& a = m.entries();
    std::vector<double> means(d);
    for (std::uint64_t t = 1; t <= max_t; ++t) {
        std::fill(means.begin(), means.end(), 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            if (z[j] == 0) {
                continue;
            }
            const auto zj = static_cast<double>(z[j]);
            for (std::size_t k = 0; k < d; ++k) {
                means[k] += zj * a[j * d + k];
            }
        }
        std::uint64_t total = 0;
        for (std::size_t k = 0; k < d; ++k) {
            z[k] = rng.poisson(means[k]);
            total += z[k];
        }
        if (total > explosion_guard) {
            throw PopulationExplosion("generation " + std::to_string(t) + " exceeds " +
                                      std::to_string(explosion_guard) + " individuals");
        }
        traj.push_back(z);
        if (total == 0) {
            break;
        }
    }
    return traj;
}

inline std::uint64_t total_size(const MultiTypeState& s) {
    return std::accumulate(s.begin(), s.end(), std::uint64_t{0});
}

} // namespace mutsel
