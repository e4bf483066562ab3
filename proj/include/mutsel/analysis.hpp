#pragma once

/// @file analysis.hpp
/// @brief Closed-form predictors: equilibrium position of the gamma-ranked
/// individual, the (chi, eta) regime classification, and comparison of the
/// equilibrium prediction with recorded runs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "core.hpp"
#include "ea.hpp"
#include "ranking.hpp"

namespace mutsel {

/// ln(beta(gamma) / gamma) / chi, the leading-ones fraction at which the
/// gamma-ranked individual balances selection and mutation.
inline double equilibrium_position(double gamma, double eta, double chi) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw DomainError("γ must lie in (0, 1)");
    }
    if (!(eta > 1.0 && eta <= 2.0)) {
        throw DomainError("η must satisfy 1 < η ≤ 2");
    }
    if (!(chi > 0.0)) {
        throw DomainError("χ must be positive");
    }
    // beta(gamma) / gamma = eta (1 - gamma) + gamma
    return std::log(eta * (1.0 - gamma) + gamma) / chi;
}

enum class Regime { ExpLowPressure, PolyBalanced, ExpHighPressure, Unclassified };

inline const char* to_string(Regime r) noexcept {
    switch (r) {
    case Regime::ExpLowPressure:
        return "ExpLowPressure";
    case Regime::PolyBalanced:
        return "PolyBalanced";
    case Regime::ExpHighPressure:
        return "ExpHighPressure";
    case Regime::Unclassified:
        return "Unclassified";
    }
    return "Unclassified";
}

inline Regime regime_from_string(const std::string& s) {
    for (auto r : {Regime::ExpLowPressure, Regime::PolyBalanced, Regime::ExpHighPressure, Regime::Unclassified}) {
        if (s == to_string(r)) {
            return r;
        }
    }
    throw DomainError("unknown regime '" + s + "'");
}

struct RegimeThresholds {
    double low = 0.0;      // exp(chi (sigma - delta)) - epsilon
    double balanced = 0.0; // exp(chi sigma)
    double high = 0.0;     // (2 exp(chi (sigma + 3 delta)) - 1) / (1 - delta)

    friend bool operator==(const RegimeThresholds&, const RegimeThresholds&) = default;
};

struct RegimeVerdict {
    Regime regime = Regime::Unclassified;
    RegimeThresholds thresholds;

    friend bool operator==(const RegimeVerdict&, const RegimeVerdict&) = default;
};

inline RegimeThresholds regime_thresholds(double chi, const SelPresParams& p, double epsilon) {
    RegimeThresholds t;
    t.low = std::exp(chi * (p.sigma() - p.delta())) - epsilon;
    t.balanced = std::exp(chi * p.sigma());
    t.high = (2.0 * std::exp(chi * (p.sigma() + 3.0 * p.delta())) - 1.0) / (1.0 - p.delta());
    return t;
}

/// Exact balance uses |eta - exp(chi sigma)| <= 1e-12; sweeps labelling a grid
/// pass a wider `balanced_band`. The balanced test takes priority, then the
/// low and high pressure thresholds.
inline RegimeVerdict classify_regime(double eta, double chi, const SelPresParams& p, double epsilon,
                                     double balanced_band = 1e-12) {
    if (!(eta > 1.0 && eta <= 2.0)) {
        throw DomainError("η must satisfy 1 < η ≤ 2");
    }
    if (!(chi > 0.0)) {
        throw DomainError("χ must be positive");
    }
    if (!(epsilon > 0.0)) {
        throw DomainError("ε must be positive");
    }
    RegimeVerdict v;
    v.thresholds = regime_thresholds(chi, p, epsilon);
    if (std::fabs(eta - v.thresholds.balanced) <= balanced_band) {
        v.regime = Regime::PolyBalanced;
    } else if (eta < v.thresholds.low) {
        v.regime = Regime::ExpLowPressure;
    } else if (eta > v.thresholds.high) {
        v.regime = Regime::ExpHighPressure;
    } else {
        v.regime = Regime::Unclassified;
    }
    return v;
}

struct EquilibriumReport {
    double gamma = 0.0;
    double predicted_xi_star = 0.0;
    /// Time-averaged L_t / n over the trailing window.
    double empirical_mean = 0.0;
    double deviation = 0.0;
    /// L / n at the start of the averaging window.
    double reference_level = 0.0;
    /// Smallest and largest L_t / n over the whole trace.
    double excursion_min = 0.0;
    double excursion_max = 0.0;
    std::size_t window_snapshots = 0;
};

/// Compares the recorded trace of the gamma-ranked individual with the
/// equilibrium prediction. The window covers the last ceil(window_fraction * m)
/// of the m recorded snapshots.
inline EquilibriumReport equilibrium_report(const RunRecord& rec, double gamma, double window_fraction) {
    if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
        throw DomainError("window fraction must lie in (0, 1]");
    }
    if (rec.snapshots.empty()) {
        throw DomainError("empty trace");
    }
    const auto n = static_cast<double>(rec.config.n);
    std::vector<double> levels;
    levels.reserve(rec.snapshots.size());
    for (const auto& s : rec.snapshots) {
        const auto l = s.leading_ones_at(gamma);
        if (!l) {
            throw DomainError("γ = " + std::to_string(gamma) + " was not tracked in this run");
        }
        levels.push_back(static_cast<double>(*l) / n);
    }
    const std::size_t m = levels.size();
    const auto w = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(m) - 1e-9)), 1, m);

    EquilibriumReport r;
    r.gamma = gamma;
    r.predicted_xi_star = equilibrium_position(gamma, rec.config.eta, rec.config.chi);
    double sum = 0.0;
    for (std::size_t i = m - w; i < m; ++i) {
        sum += levels[i];
    }
    r.empirical_mean = sum / static_cast<double>(w);
    r.deviation = std::fabs(r.empirical_mean - r.predicted_xi_star);
    r.reference_level = levels[m - w];
    r.excursion_min = *std::min_element(levels.begin(), levels.end());
    r.excursion_max = *std::max_element(levels.begin(), levels.end());
    r.window_snapshots = w;
    return r;
}

} // namespace mutsel
