#pragma once

/// @file spectral.hpp
/// @brief Mean matrix of the prefix-sum branching model, Perron root by power
/// iteration, and the analytic Perron and eigenvector bounds that go with it.
///
/// Types of the branching model are indexed 1..d with d = floor(n ln(phi) / chi).
/// Entry a_ij is the expected number of type-j offspring of a type-i individual:
///
///   a_ij = eta / n^2                               if j - i >  w
///        = eta * C(N, j - i) * (chi/n)^(j - i)     if 1 <= j - i <= w
///        = 1 / kappa                               if i == j
///        = (1/kappa) * C(i, i - j) * (chi/n)^(i-j) if i > j
///
/// with N = floor(n ln(eta kappa phi) / chi) and band width w = ceil(2 log n).
/// Entries are computed in log space; both forms are stored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"

namespace mutsel {

enum class LogBase { Two, Natural };

/// Construction parameters of a mean matrix built from the SelPres model.
struct SelPresMatrixParams {
    std::size_t n = 0;
    double eta = 0.0;
    double chi = 0.0;
    double kappa = 0.0;
    double phi = 0.0;
    LogBase log_base = LogBase::Two;
};

class MeanMatrix {
  public:
    /// Dense matrix from row-major entries; all entries must be non-negative.
    MeanMatrix(std::size_t d, std::vector<double> row_major) : d_(d), a_(std::move(row_major)) {
        if (d == 0) {
            throw DomainError("matrix dimension must be at least 1");
        }
        if (a_.size() != d * d) {
            throw DomainError("matrix needs exactly d*d entries");
        }
        log_a_.resize(a_.size());
        for (std::size_t i = 0; i < a_.size(); ++i) {
            if (!(a_[i] >= 0.0) || !std::isfinite(a_[i])) {
                throw DomainError("matrix entries must be finite and non-negative");
            }
            log_a_[i] = a_[i] > 0.0 ? std::log(a_[i]) : -std::numeric_limits<double>::infinity();
        }
    }

    MeanMatrix(std::initializer_list<std::initializer_list<double>> rows) : MeanMatrix(rows.size(), flatten(rows)) {}

    /// Builds from log-entries (may be -inf for zeros).
    static MeanMatrix from_log(std::size_t d, std::vector<double> log_entries,
                               std::optional<SelPresMatrixParams> provenance = std::nullopt) {
        std::vector<double> lin(log_entries.size());
        for (std::size_t i = 0; i < lin.size(); ++i) {
            lin[i] = std::exp(log_entries[i]);
        }
        MeanMatrix m(d, std::move(lin));
        m.log_a_ = std::move(log_entries);
        m.provenance_ = provenance;
        return m;
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return d_; }

    /// 1-based entry access.
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return a_[index(i, j)]; }
    [[nodiscard]] double log_entry(std::size_t i, std::size_t j) const { return log_a_[index(i, j)]; }

    /// 0-based row-major storage.
    [[nodiscard]] const std::vector<double>& entries() const noexcept { return a_; }

    [[nodiscard]] const std::optional<SelPresMatrixParams>& provenance() const noexcept { return provenance_; }

    /// y = A x
    [[nodiscard]] std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(d_, 0.0);
        for (std::size_t i = 0; i < d_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d_; ++j) {
                s += a_[i * d_ + j] * x[j];
            }
            y[i] = s;
        }
        return y;
    }

    /// y^T = x^T A
    [[nodiscard]] std::vector<double> apply_left(const std::vector<double>& x) const {
        std::vector<double> y(d_, 0.0);
        for (std::size_t i = 0; i < d_; ++i) {
            for (std::size_t j = 0; j < d_; ++j) {
                y[j] += x[i] * a_[i * d_ + j];
            }
        }
        return y;
    }

  private:
    static std::vector<double> flatten(std::initializer_list<std::initializer_list<double>> rows) {
        std::vector<double> out;
        for (const auto& r : rows) {
            if (r.size() != rows.size()) {
                throw DomainError("matrix rows must all have length d");
            }
            out.insert(out.end(), r.begin(), r.end());
        }
        return out;
    }

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const {
        if (i < 1 || i > d_ || j < 1 || j > d_) {
            throw std::out_of_range("matrix index outside [1, d]");
        }
        return (i - 1) * d_ + (j - 1);
    }

    std::size_t d_;
    std::vector<double> a_;
    std::vector<double> log_a_;
    std::optional<SelPresMatrixParams> provenance_;
};

namespace detail {

inline double log_choose(double n, double k) {
    if (k < 0.0 || k > n) {
        return -std::numeric_limits<double>::infinity();
    }
    const double kk = std::min(k, n - k);
    if (kk <= 64.0) {
        // Short products: a sum of logs keeps full relative accuracy,
        // where the lgamma difference loses digits for large n.
        double s = 0.0;
        for (double j = 0.0; j < kk; j += 1.0) {
            s += std::log((n - j) / (kk - j));
        }
        return s;
    }
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double log_in_base(double x, LogBase b) { return b == LogBase::Two ? std::log2(x) : std::log(x); }

} // namespace detail

/// Number of types, max(1, floor(n ln(phi) / chi)).
inline std::size_t type_count(std::size_t n, double chi, double phi) {
    const double d = std::floor(static_cast<double>(n) * std::log(phi) / chi + 1e-9);
    return d < 1.0 ? 1 : static_cast<std::size_t>(d);
}

/// Width of the band of binomial entries above the diagonal, ceil(2 log n).
inline std::size_t band_width(std::size_t n, LogBase base) {
    return static_cast<std::size_t>(std::ceil(2.0 * detail::log_in_base(static_cast<double>(n), base) - 1e-9));
}

inline MeanMatrix build_mean_matrix(std::size_t n, double eta, double chi, double kappa, double phi,
                                    LogBase base = LogBase::Two) {
    if (n < 2) {
        throw DomainError("mean matrix requires n ≥ 2");
    }
    if (!(eta > 1.0 && eta <= 2.0)) {
        throw DomainError("η must satisfy 1 < η ≤ 2");
    }
    if (!(chi > 0.0)) {
        throw DomainError("χ must be positive");
    }
    if (!(phi > 1.0 && phi < kappa)) {
        throw DomainError("mean matrix requires 1 < φ < κ");
    }
    const auto nd = static_cast<double>(n);
    const std::size_t d = type_count(n, chi, phi);
    const std::size_t w = band_width(n, base);
    const double big_n = std::floor(nd * std::log(eta * kappa * phi) / chi + 1e-9);
    const double log_rate = std::log(chi / nd);
    const double log_eta = std::log(eta);
    const double log_inv_kappa = -std::log(kappa);

    std::vector<double> logs(d * d);
    for (std::size_t i = 1; i <= d; ++i) {
        for (std::size_t j = 1; j <= d; ++j) {
            double v;
            if (j > i) {
                const std::size_t m = j - i;
                if (m > w) {
                    v = log_eta - 2.0 * std::log(nd);
                } else {
                    v = log_eta + detail::log_choose(big_n, static_cast<double>(m)) + static_cast<double>(m) * log_rate;
                }
            } else if (i == j) {
                v = log_inv_kappa;
            } else {
                const std::size_t m = i - j;
                v = log_inv_kappa + detail::log_choose(static_cast<double>(i), static_cast<double>(m)) +
                    static_cast<double>(m) * log_rate;
            }
            logs[(i - 1) * d + (j - 1)] = v;
        }
    }
    return MeanMatrix::from_log(d, std::move(logs), SelPresMatrixParams{n, eta, chi, kappa, phi, base});
}

/// Strong connectivity of the graph with an edge i -> j whenever a_ij > 0.
inline bool check_irreducible(const MeanMatrix& m) {
    const std::size_t d = m.dimension();
    const auto& a = m.entries();
    const auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(d, 0);
        std::queue<std::size_t> q;
        q.push(0);
        seen[0] = 1;
        std::size_t count = 1;
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (std::size_t v = 0; v < d; ++v) {
                const double e = transpose ? a[v * d + u] : a[u * d + v];
                if (e > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    ++count;
                    q.push(v);
                }
            }
        }
        return count == d;
    };
    return reaches_all(false) && reaches_all(true);
}

struct PerronResult {
    double rho = 0.0;
    /// Right eigenvector, max entry 1.
    std::vector<double> v;
    double v_star = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0;
};

class PerronNotConverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Dominant eigenpair by power iteration from the all-ones vector.
///
/// When some diagonal entry is zero the iteration runs on A + sI with
/// s = max row sum / 2, which is primitive for irreducible A and has the same
/// eigenvectors. Converged when successive estimates differ by less than tol
/// and ||Av - rho v||_inf / ||v||_inf <= 1e-10.
inline PerronResult perron(const MeanMatrix& m, double tol = 1e-14, std::size_t max_iters = 1'000'000) {
    if (!check_irreducible(m)) {
        throw DomainError("power iteration requires an irreducible matrix");
    }
    const std::size_t d = m.dimension();
    const auto& a = m.entries();
    double shift = 0.0;
    bool zero_diag = false;
    double max_row = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            row += a[i * d + j];
        }
        max_row = std::max(max_row, row);
        zero_diag = zero_diag || a[i * d + i] == 0.0;
    }
    if (zero_diag) {
        shift = 0.5 * max_row;
    }

    const auto rayleigh = [](const std::vector<double>& v, const std::vector<double>& av) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            num += v[i] * av[i];
            den += v[i] * v[i];
        }
        return num / den;
    };
    const auto residual_of = [](const std::vector<double>& v, const std::vector<double>& av, double rho) {
        double r = 0.0;
        double vmax = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            r = std::max(r, std::fabs(av[i] - rho * v[i]));
            vmax = std::max(vmax, std::fabs(v[i]));
        }
        return r / vmax;
    };

    std::vector<double> v(d, 1.0);
    std::vector<double> av = m.apply(v);
    double rho = rayleigh(v, av);
    for (std::size_t it = 1; it <= max_iters; ++it) {
        std::vector<double> next(d);
        double vmax = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            next[i] = av[i] + shift * v[i];
            vmax = std::max(vmax, next[i]);
        }
        if (!(vmax > 0.0)) {
            throw PerronNotConverged("power iterate collapsed to zero");
        }
        for (auto& x : next) {
            x /= vmax;
        }
        v = std::move(next);
        av = m.apply(v);
        const double next_rho = rayleigh(v, av);
        const double res = residual_of(v, av, next_rho);
        const bool stable = std::fabs(next_rho - rho) < tol * std::max(1.0, std::fabs(next_rho));
        rho = next_rho;
        if (stable && res <= 1e-10) {
            PerronResult out;
            out.rho = rho;
            out.v = v;
            out.v_star = *std::min_element(v.begin(), v.end());
            out.iterations = it;
            out.residual = res;
            if (!(out.rho > 0.0) || !(out.v_star > 0.0)) {
                throw PerronNotConverged("dominant eigenpair is not strictly positive");
            }
            return out;
        }
    }
    throw PerronNotConverged("power iteration did not converge in " + std::to_string(max_iters) +
                             " iterations (near-degenerate spectrum?)");
}

// ---------------------------------------------------------------------------
// Analytic bounds
// ---------------------------------------------------------------------------

struct Lemma6Constants {
    double r = 0.0;
    double q = 0.0;
};

/// r = (2 / (eta - 1)) * sqrt(kappa) / (sqrt(kappa) - 1),
/// q = ln(eta kappa phi) / ln(1 + 1 / (r eta)).
inline Lemma6Constants lemma6_constants(double eta, double kappa, double phi) {
    if (!(eta > 1.0 && eta <= 2.0)) {
        throw DomainError("η must satisfy 1 < η ≤ 2");
    }
    if (!(kappa > 1.0)) {
        throw DomainError("κ must exceed 1");
    }
    if (!(phi > 1.0)) {
        throw DomainError("φ must exceed 1");
    }
    const double sk = std::sqrt(kappa);
    Lemma6Constants c;
    c.r = (2.0 / (eta - 1.0)) * (sk / (sk - 1.0));
    c.q = std::log(eta * kappa * phi) / std::log1p(1.0 / (c.r * eta));
    if (!(c.q > 1.0)) {
        throw std::logic_error("q must exceed 1 for valid η, κ, φ");
    }
    return c;
}

/// Largest phi admissible for frobenius_bound at the q implied by phi itself.
inline double phi_limit(double eta, double kappa, double phi) {
    return std::pow(kappa, 1.0 / (2.0 * lemma6_constants(eta, kappa, phi).q));
}

/// eta/n + 1/r + phi^q / kappa, valid when phi < kappa^(1/(2q)).
inline double frobenius_bound(std::size_t n, double eta, double chi, double kappa, double phi) {
    if (n < 1 || !(chi > 0.0)) {
        throw DomainError("frobenius bound requires n ≥ 1 and χ > 0");
    }
    const auto c = lemma6_constants(eta, kappa, phi);
    const double limit = std::pow(kappa, 1.0 / (2.0 * c.q));
    if (!(phi < limit)) {
        throw DomainError("φ = " + std::to_string(phi) + " violates φ < κ^(1/2q); maximal admissible φ is " +
                          std::to_string(limit));
    }
    return eta / static_cast<double>(n) + 1.0 / c.r + std::pow(phi, c.q) / kappa;
}

/// Fixed point of phi = min(phi0, kappa^(1/(2 q(phi)))) * (1 - 1e-3), phi0 = kappa^(1/4).
inline double choose_phi(double eta, double chi, double kappa) {
    if (!(kappa > 1.0)) {
        throw DomainError("κ must exceed 1");
    }
    if (!(chi > 0.0)) {
        throw DomainError("χ must be positive");
    }
    const double phi0 = std::pow(kappa, 0.25);
    double phi = phi0;
    for (int it = 0; it < 1000; ++it) {
        double next = std::min(phi0, phi_limit(eta, kappa, phi)) * (1.0 - 1e-3);
        if (!(next > 1.0)) {
            // The multiplicative margin overshoots 1 when the limit is within
            // 1e-3 of it; shrink the excess over 1 instead.
            next = 1.0 + (std::min(phi0, phi_limit(eta, kappa, phi)) - 1.0) * (1.0 - 1e-3);
        }
        if (std::fabs(next - phi) <= 1e-9) {
            return next;
        }
        phi = next;
    }
    throw std::runtime_error("choose_phi did not stabilize within 1000 iterations (η=" + std::to_string(eta) +
                             ", κ=" + std::to_string(kappa) + ")");
}

/// log of 2^d * (n/chi)^(d - h) with d = type_count(n, chi, phi).
inline double eigen_ratio_bound(std::size_t h, std::size_t n, double chi, double phi) {
    const std::size_t d = type_count(n, chi, phi);
    if (h < 1 || h > d) {
        throw DomainError("type index h outside [1, d]");
    }
    const auto dd = static_cast<double>(d);
    return dd * std::log(2.0) + (dd - static_cast<double>(h)) * std::log(static_cast<double>(n) / chi);
}

/// min(1, rho^t / k * v_h / v*): bound on P(sum_j Z_{t,j} >= k | Z_0 = e_h).
inline double tail_bound(const PerronResult& p, std::size_t h, std::uint64_t t, std::uint64_t k) {
    if (k < 1 || t < 1) {
        throw DomainError("tail bound requires t ≥ 1 and k ≥ 1");
    }
    if (h < 1 || h > p.v.size()) {
        throw DomainError("type index h outside [1, d]");
    }
    const double log_b = static_cast<double>(t) * std::log(p.rho) - std::log(static_cast<double>(k)) +
                         std::log(p.v[h - 1] / p.v_star);
    return std::min(1.0, std::exp(log_b));
}

} // namespace mutsel
