#pragma once

/// @file ranking.hpp
/// @brief Linear ranking selection.
///
/// An individual at normalized rank x in [0, 1] (0 = best) is selected with
/// density alpha(x) = eta(1 - 2x) + 2x. The cumulative selection probability of
/// the best x-fraction of the population is beta(x) = x(eta(1 - x) + x).
///
/// Sampling draws u uniform in [0, 1), inverts beta in closed form and maps the
/// resulting fraction to rank ceil(gamma * lambda). This realizes
/// P(r <= i) = beta(i / lambda) exactly at every rank boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace mutsel {

namespace detail {

inline void check_unit(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError(std::string(name) + " must lie in [0, 1]");
    }
}

inline void check_eta(double eta) {
    if (!(eta > 1.0 && eta <= 2.0)) {
        throw DomainError("η must satisfy 1 < η ≤ 2");
    }
}

} // namespace detail

/// Selection density at normalized rank x.
inline double alpha(double x, double eta) {
    detail::check_unit(x, "x");
    detail::check_eta(eta);
    return eta * (1.0 - 2.0 * x) + 2.0 * x;
}

/// Cumulative selection probability of ranks [0, x].
inline double beta(double x, double eta) {
    detail::check_unit(x, "x");
    detail::check_eta(eta);
    return x * (eta * (1.0 - x) + x);
}

/// Probability mass of the rank interval [from, to].
inline double beta(double from, double to, double eta) { return beta(to, eta) - beta(from, eta); }

/// Inverse of beta(., eta) on [0, 1].
///
/// Uses the rationalized root 2u / (eta + sqrt(eta^2 - 4(eta - 1)u)), which is
/// free of cancellation for small u and reduces to u as eta -> 1.
inline double beta_inverse(double u, double eta) {
    detail::check_unit(u, "u");
    detail::check_eta(eta);
    const double disc = std::max(0.0, eta * eta - 4.0 * (eta - 1.0) * u);
    const double gamma = 2.0 * u / (eta + std::sqrt(disc));
    return std::clamp(gamma, 0.0, 1.0);
}

/// Per-rank selection probabilities for a population of size lambda.
class RankDistribution {
  public:
    RankDistribution(std::size_t lambda, double eta) : lambda_(lambda), eta_(eta) {
        if (lambda < 1) {
            throw DomainError("λ must be at least 1");
        }
        detail::check_eta(eta);
        probability_.resize(lambda);
        const auto l = static_cast<double>(lambda);
        double previous = 0.0;
        for (std::size_t i = 1; i <= lambda; ++i) {
            const double current = i == lambda ? 1.0 : beta(static_cast<double>(i) / l, eta);
            probability_[i - 1] = current - previous;
            previous = current;
        }
    }

    [[nodiscard]] std::size_t lambda() const noexcept { return lambda_; }
    [[nodiscard]] double eta() const noexcept { return eta_; }

    /// p_1 .. p_lambda (index 0 holds p_1).
    [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probability_; }

    /// P(r <= i) = beta(i / lambda).
    [[nodiscard]] double cumulative(std::size_t i) const {
        if (i > lambda_) {
            throw DomainError("rank outside [0, λ]");
        }
        return i == lambda_ ? 1.0 : beta(static_cast<double>(i) / static_cast<double>(lambda_), eta_);
    }

    /// Draws a rank in 1..lambda.
    std::size_t sample(RandomSource& rng) const {
        const double gamma = beta_inverse(rng.uniform(), eta_);
        const auto r = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(lambda_)));
        return std::clamp<std::size_t>(r, 1, lambda_);
    }

  private:
    std::size_t lambda_;
    double eta_;
    std::vector<double> probability_;
};

inline RankDistribution build_rank_distribution(std::size_t lambda, double eta) {
    return RankDistribution(lambda, eta);
}

inline std::size_t sample_rank(const RankDistribution& dist, RandomSource& rng) { return dist.sample(rng); }

/// Checks beta(gamma / x) / beta(gamma) >= 1 / x up to 1e-12.
inline bool check_beta_ratio(double gamma, double x, double eta) {
    if (!(x >= 1.0) || !std::isfinite(x)) {
        throw DomainError("x must be at least 1");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw DomainError("γ must lie in (0, 1)");
    }
    return beta(gamma / x, eta) / beta(gamma, eta) >= 1.0 / x - 1e-12;
}

} // namespace mutsel
