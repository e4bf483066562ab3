#pragma once

/// @file experiments.hpp
/// @brief Sweep orchestration, equilibrium and branching validation
/// experiments, CSV persistence and JSON configuration ingestion.
///
/// Every CSV written here starts with the schema line `# mutsel-lab v1`.
/// Results are ordered by (point_index, trial_index) or (gamma, seed) whatever
/// the completion order of the workers, so output bytes depend only on the
/// inputs and seeds.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "analysis.hpp"
#include "branching.hpp"
#include "core.hpp"
#include "ea.hpp"
#include "fitness.hpp"
#include "spectral.hpp"

namespace mutsel {

inline constexpr const char* csv_schema_line = "# mutsel-lab v1";

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

inline std::size_t default_jobs() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Calls task(i) for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any task is rethrown after all workers finish.
template <typename Task>
void parallel_for(std::size_t count, std::size_t jobs, Task&& task) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) {
                return;
            }
            try {
                task(i);
            } catch (...) {
                if (!failed.exchange(true)) {
                    failure = std::current_exception();
                }
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(jobs);
        for (std::size_t j = 0; j < jobs; ++j) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

namespace detail {

/// Shortest decimal text that parses back to the same double.
inline std::string fmt_double(double x) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) {
            break;
        }
    }
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

inline std::string sanitize_field(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Sweeps over (chi, eta)
// ---------------------------------------------------------------------------

struct SweepSpec {
    std::vector<double> chi_grid;
    std::vector<double> eta_grid;
    SelPresParams selpres{0.5, 0.05, 1};
    std::size_t n = 60;
    std::size_t lambda = 60;
    std::uint64_t budget_evaluations = 10'000'000;
    std::size_t trials_per_point = 10;
    std::uint64_t base_seed = 0;
    /// Margin of the low-pressure threshold.
    double epsilon = 0.1;
    /// Half-width in eta of the balanced band used to label grid cells.
    double balanced_band = 0.02;
};

struct SweepCell {
    double chi = 0.0;
    double eta = 0.0;
    std::size_t successes = 0;
    std::size_t trials = 0;
    /// Lower median of T over trials; empty when that median run was censored.
    std::optional<std::uint64_t> median_T;
    RegimeVerdict verdict;
    /// Every trial satisfied lambda(tau - 1) <= T <= lambda tau.
    bool accounting_ok = true;
    /// Empty on success; otherwise the configuration error of this cell.
    std::string error;

    friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

inline void check_sweep_spec(const SweepSpec& s) {
    if (s.chi_grid.empty() || s.eta_grid.empty()) {
        throw DomainError("sweep grids must be non-empty");
    }
    if (s.trials_per_point < 1) {
        throw DomainError("trials_per_point must be at least 1");
    }
}

/// Stream index of one sweep trial: point index in the high 32 bits.
inline std::uint64_t sweep_stream(std::size_t point_index, std::size_t trial_index) {
    return (static_cast<std::uint64_t>(point_index) << 32) | static_cast<std::uint64_t>(trial_index);
}

/// Runs every (chi, eta) point, chi-major. Invalid cells are reported in
/// SweepCell::error and do not stop the sweep.
inline std::vector<SweepCell> run_sweep(const SweepSpec& spec, std::size_t jobs = default_jobs()) {
    check_sweep_spec(spec);
    const std::size_t points = spec.chi_grid.size() * spec.eta_grid.size();
    const std::size_t trials = spec.trials_per_point;
    const Objective objective = Objective::selpres(spec.n, spec.selpres);

    struct TrialOutcome {
        bool success = false;
        std::uint64_t evaluations = 0;
        bool accounting_ok = true;
        std::string error;
    };
    std::vector<TrialOutcome> outcomes(points * trials);

    parallel_for(points * trials, jobs, [&](std::size_t task) {
        const std::size_t point = task / trials;
        const std::size_t trial = task % trials;
        EaConfig c;
        c.n = spec.n;
        c.lambda = spec.lambda;
        c.chi = spec.chi_grid[point / spec.eta_grid.size()];
        c.eta = spec.eta_grid[point % spec.eta_grid.size()];
        c.budget_evaluations = spec.budget_evaluations;
        c.seed = spec.base_seed;
        auto& out = outcomes[task];
        try {
            RandomSource rng = derive_stream(spec.base_seed, sweep_stream(point, trial));
            RunOptions opts;
            opts.record_stride = std::numeric_limits<std::size_t>::max();
            const RunRecord rec = run(c, objective, opts, rng);
            out.success = rec.outcome == Outcome::OptimumFound;
            out.evaluations = rec.evaluations;
            out.accounting_ok = rec.accounting_holds();
        } catch (const DomainError& e) {
            out.error = e.what();
        }
    });

    std::vector<SweepCell> cells;
    cells.reserve(points);
    for (std::size_t point = 0; point < points; ++point) {
        SweepCell cell;
        cell.chi = spec.chi_grid[point / spec.eta_grid.size()];
        cell.eta = spec.eta_grid[point % spec.eta_grid.size()];
        cell.trials = trials;
        std::vector<std::uint64_t> ts;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const auto& o = outcomes[point * trials + trial];
            if (!o.error.empty()) {
                cell.error = o.error;
                continue;
            }
            cell.successes += o.success ? 1 : 0;
            cell.accounting_ok = cell.accounting_ok && o.accounting_ok;
            ts.push_back(o.success ? o.evaluations : std::numeric_limits<std::uint64_t>::max());
        }
        if (!cell.error.empty()) {
            cell.successes = 0;
        } else {
            std::sort(ts.begin(), ts.end());
            const std::uint64_t med = ts[(ts.size() - 1) / 2];
            if (med != std::numeric_limits<std::uint64_t>::max()) {
                cell.median_T = med;
            }
        }
        try {
            cell.verdict = classify_regime(cell.eta, cell.chi, spec.selpres, spec.epsilon, spec.balanced_band);
        } catch (const DomainError& e) {
            if (cell.error.empty()) {
                cell.error = e.what();
            }
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

inline void write_sweep_csv(const std::vector<SweepCell>& cells, std::ostream& out) {
    out << csv_schema_line << '\n';
    out << "chi,eta,successes,trials,median_T,verdict,threshold_low,threshold_balanced,threshold_high,"
           "accounting_ok,status\n";
    for (const auto& c : cells) {
        out << detail::fmt_double(c.chi) << ',' << detail::fmt_double(c.eta) << ',' << c.successes << ','
            << c.trials << ',' << (c.median_T ? std::to_string(*c.median_T) : "censored") << ','
            << to_string(c.verdict.regime) << ',' << detail::fmt_double(c.verdict.thresholds.low) << ','
            << detail::fmt_double(c.verdict.thresholds.balanced) << ','
            << detail::fmt_double(c.verdict.thresholds.high) << ',' << (c.accounting_ok ? 1 : 0) << ','
            << (c.error.empty() ? "ok" : "error: " + detail::sanitize_field(c.error)) << '\n';
    }
}

inline std::vector<SweepCell> read_sweep_csv(std::istream& in) {
    std::vector<SweepCell> cells;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto f = detail::split_csv_line(line);
        if (f.size() != 11) {
            throw DomainError("malformed sweep CSV row: " + line);
        }
        SweepCell c;
        c.chi = std::stod(f[0]);
        c.eta = std::stod(f[1]);
        c.successes = std::stoull(f[2]);
        c.trials = std::stoull(f[3]);
        if (f[4] != "censored") {
            c.median_T = std::stoull(f[4]);
        }
        c.verdict.regime = regime_from_string(f[5]);
        c.verdict.thresholds = {std::stod(f[6]), std::stod(f[7]), std::stod(f[8])};
        c.accounting_ok = f[9] == "1";
        if (f[10] != "ok") {
            c.error = f[10].rfind("error: ", 0) == 0 ? f[10].substr(7) : f[10];
        }
        cells.push_back(std::move(c));
    }
    return cells;
}

/// Samples the three regime boundary curves in eta at `points` chi values
/// spread evenly over [chi_lo, chi_hi].
struct BoundaryPoint {
    std::string curve;
    double chi;
    double eta;
};

inline std::vector<BoundaryPoint> regime_boundaries(double chi_lo, double chi_hi, const SelPresParams& p,
                                                    double epsilon, std::size_t points = 200) {
    std::vector<BoundaryPoint> out;
    out.reserve(3 * points);
    const char* names[3] = {"low", "balanced", "high"};
    for (int curve = 0; curve < 3; ++curve) {
        for (std::size_t i = 0; i < points; ++i) {
            const double chi = points == 1 ? chi_lo
                                           : chi_lo + (chi_hi - chi_lo) * static_cast<double>(i) /
                                                          static_cast<double>(points - 1);
            const auto t = regime_thresholds(chi, p, epsilon);
            const double eta = curve == 0 ? t.low : curve == 1 ? t.balanced : t.high;
            out.push_back({names[curve], chi, eta});
        }
    }
    return out;
}

/// Companion path for the boundary curves: "<stem>_boundaries<ext>".
inline std::filesystem::path boundaries_path(const std::filesystem::path& path) {
    auto p = path;
    p.replace_filename(path.stem().string() + "_boundaries" + path.extension().string());
    return p;
}

/// Writes heatmap data (chi, eta, success_rate, verdict) to `path` and the
/// boundary curves to boundaries_path(path). Returns the companion path.
inline std::filesystem::path emit_phase_plot_data(const std::vector<SweepCell>& cells, const std::filesystem::path& path,
                                                  const SelPresParams& p, double epsilon) {
    if (cells.empty()) {
        throw DomainError("no sweep cells to plot");
    }
    std::ofstream data(path);
    if (!data) {
        throw std::runtime_error("cannot open " + path.string());
    }
    data << csv_schema_line << '\n' << "chi,eta,success_rate,verdict\n";
    double lo = cells.front().chi;
    double hi = cells.front().chi;
    for (const auto& c : cells) {
        const double rate = c.trials == 0 ? 0.0 : static_cast<double>(c.successes) / static_cast<double>(c.trials);
        data << detail::fmt_double(c.chi) << ',' << detail::fmt_double(c.eta) << ',' << detail::fmt_double(rate)
             << ',' << to_string(c.verdict.regime) << '\n';
        lo = std::min(lo, c.chi);
        hi = std::max(hi, c.chi);
    }
    if (lo == hi) {
        lo = 0.5 * lo;
        hi = 1.5 * hi;
    }
    const auto companion = boundaries_path(path);
    std::ofstream curves(companion);
    if (!curves) {
        throw std::runtime_error("cannot open " + companion.string());
    }
    curves << csv_schema_line << '\n' << "curve,chi,eta\n";
    for (const auto& b : regime_boundaries(lo, hi, p, epsilon)) {
        curves << b.curve << ',' << detail::fmt_double(b.chi) << ',' << detail::fmt_double(b.eta) << '\n';
    }
    if (!data || !curves) {
        throw std::runtime_error("write failure while emitting plot data");
    }
    return companion;
}

// ---------------------------------------------------------------------------
// Equilibrium experiment
// ---------------------------------------------------------------------------

struct EquilibriumRow {
    std::size_t seed_index = 0;
    EquilibriumReport report;
};

struct EquilibriumResult {
    /// Ordered by gamma (ascending), then seed index.
    std::vector<EquilibriumRow> rows;
    bool accounting_ok = true;
    std::size_t runs = 0;

    /// Per-gamma median of the empirical means, ascending gamma.
    [[nodiscard]] std::vector<std::pair<double, double>> median_empirical_by_gamma() const {
        std::map<double, std::vector<double>> by;
        for (const auto& r : rows) {
            by[r.report.gamma].push_back(r.report.empirical_mean);
        }
        std::vector<std::pair<double, double>> out;
        for (auto& [g, v] : by) {
            std::sort(v.begin(), v.end());
            const std::size_t m = v.size();
            out.emplace_back(g, m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]));
        }
        return out;
    }
};

/// Runs `seeds` LeadingOnes runs of exactly `generations` populations each
/// (budget lambda * generations) and reports every tracked gamma per run.
/// Run s uses derive_stream(config.seed, s).
inline EquilibriumResult run_equilibrium_experiment(EaConfig config, std::vector<double> gammas,
                                                    std::uint64_t generations, std::size_t seeds,
                                                    std::size_t jobs = default_jobs(),
                                                    double window_fraction = 1.0 / 3.0) {
    if (generations == 0) {
        throw DomainError("empty trace");
    }
    if (seeds == 0) {
        throw DomainError("at least one seed is required");
    }
    if (gammas.empty()) {
        throw DomainError("at least one γ is required");
    }
    std::sort(gammas.begin(), gammas.end());
    gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
    config.budget_evaluations = config.lambda * generations;
    validate_config(config);
    const Objective objective = Objective::leading_ones(config.n);

    std::vector<std::vector<EquilibriumReport>> per_seed(seeds);
    std::vector<char> accounting(seeds, 1);
    parallel_for(seeds, jobs, [&](std::size_t s) {
        RandomSource rng = derive_stream(config.seed, s);
        RunOptions opts;
        opts.tracked_gammas = gammas;
        const RunRecord rec = run(config, objective, opts, rng);
        accounting[s] = rec.accounting_holds() ? 1 : 0;
        for (double g : gammas) {
            per_seed[s].push_back(equilibrium_report(rec, g, window_fraction));
        }
    });

    EquilibriumResult result;
    result.runs = seeds;
    result.accounting_ok = std::all_of(accounting.begin(), accounting.end(), [](char c) { return c != 0; });
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
        for (std::size_t s = 0; s < seeds; ++s) {
            result.rows.push_back({s, per_seed[s][gi]});
        }
    }
    return result;
}

inline void write_equilibrium_csv(const EquilibriumResult& r, std::ostream& out) {
    out << csv_schema_line << '\n';
    out << "seed,gamma,predicted_xi_star,empirical_mean,deviation,reference_level,excursion_min,excursion_max,"
           "window_snapshots\n";
    for (const auto& row : r.rows) {
        const auto& e = row.report;
        out << row.seed_index << ',' << detail::fmt_double(e.gamma) << ',' << detail::fmt_double(e.predicted_xi_star)
            << ',' << detail::fmt_double(e.empirical_mean) << ',' << detail::fmt_double(e.deviation) << ','
            << detail::fmt_double(e.reference_level) << ',' << detail::fmt_double(e.excursion_min) << ','
            << detail::fmt_double(e.excursion_max) << ',' << e.window_snapshots << '\n';
    }
}

// ---------------------------------------------------------------------------
// Branching validation
// ---------------------------------------------------------------------------

/// One empirical quantity joined with its analytic bound.
///
/// `check` is one of
///   upper    - violated when empirical > bound + 3 se
///   two_sided - violated when |empirical - bound| > 3 se
/// where se is the standard error under the hypothesis that the bound is
/// attained.
struct ValidationRow {
    std::string quantity;
    std::string instance;
    std::size_t h = 0; // start type, 0 for single-type rows
    std::uint64_t t = 0;
    std::uint64_t k = 0;
    double empirical = 0.0;
    double bound = 0.0;
    double standard_error = 0.0;
    std::string check = "upper";
    bool violated = false;
};

struct BatchRow {
    std::uint64_t trial = 0;
    std::optional<std::uint64_t> extinction_time;
    std::uint64_t max_width = 0;
    std::uint64_t total_born = 0;
};

struct SingleTypeValidation {
    std::vector<ValidationRow> rows;
    std::vector<BatchRow> batch;
};

namespace detail {

inline ValidationRow probability_row(std::string quantity, std::string instance, std::size_t h, std::uint64_t t,
                                     std::uint64_t k, std::uint64_t hits, std::uint64_t trials, double bound) {
    ValidationRow r{std::move(quantity), std::move(instance), h, t, k};
    const auto nt = static_cast<double>(trials);
    r.empirical = static_cast<double>(hits) / nt;
    r.bound = bound;
    const double b = std::clamp(bound, 0.0, 1.0);
    r.standard_error = std::sqrt(b * (1.0 - b) / nt);
    r.violated = r.empirical > r.bound + 3.0 * r.standard_error;
    return r;
}

/// lemma2_bounds extended to rho = 0, where every bound is exactly 0.
inline Lemma2Bounds bounds_or_zero(double rho, std::uint64_t t, std::uint64_t k) {
    if (rho == 0.0) {
        return {0.0, 0.0, 0.0, 0.0};
    }
    return lemma2_bounds(rho, t, k);
}

} // namespace detail

/// Monte Carlo check of a single-type process against the closed-form bounds:
/// P(Z_t >= k) <= rho^t / k, survival P(Z_t >= 1) <= rho^t, E[Z_t] = rho^t
/// (two-sided, Poisson laws only) and, for rho < 1, E[X_t] <= rho / (1 - rho).
/// `keep_batch` retains per-trajectory rows for the batch CSV.
inline SingleTypeValidation run_single_type_validation(const OffspringLaw& law, std::uint64_t max_t,
                                                       const std::vector<std::uint64_t>& ks, std::uint64_t trials,
                                                       std::uint64_t seed, bool keep_batch = false) {
    if (trials == 0 || max_t == 0) {
        throw DomainError("validation needs at least one trial and one generation");
    }
    const double rho = law.mean();
    std::vector<std::vector<std::uint64_t>> ge(max_t + 1, std::vector<std::uint64_t>(ks.size(), 0));
    std::vector<double> sum(max_t + 1, 0.0);
    std::vector<std::uint64_t> alive(max_t + 1, 0);
    double lineage_sum = 0.0;
    double lineage_sq = 0.0;
    SingleTypeValidation out;
    RandomSource rng = derive_stream(seed, 0);
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        const auto traj = simulate_single(law, max_t, rng);
        for (std::uint64_t t = 1; t <= max_t; ++t) {
            const std::uint64_t z = traj.size_at(t);
            sum[t] += static_cast<double>(z);
            alive[t] += z >= 1 ? 1 : 0;
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                ge[t][ki] += z >= ks[ki] ? 1 : 0;
            }
        }
        const auto x = static_cast<double>(traj.lineage_count);
        lineage_sum += x;
        lineage_sq += x * x;
        if (keep_batch) {
            out.batch.push_back({trial, traj.extinction_time, traj.max_width(), traj.lineage_count});
        }
    }

    std::ostringstream inst;
    inst << "single(mean=" << detail::fmt_double(rho) << ")";
    const std::string instance = inst.str();
    const auto nt = static_cast<double>(trials);
    for (std::uint64_t t = 1; t <= max_t; ++t) {
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            const auto b = detail::bounds_or_zero(rho, t, ks[ki]);
            out.rows.push_back(detail::probability_row("P(Z_t>=k)", instance, 0, t, ks[ki], ge[t][ki], trials, b.p_zt_ge_k));
        }
    }
    // Survival beyond generation t: P(Z_t >= 1) <= rho^t.
    for (std::uint64_t t = 1; t <= max_t; ++t) {
        out.rows.push_back(detail::probability_row("P(T>t)", instance, 0, t, 1, alive[t], trials,
                                                   detail::bounds_or_zero(rho, t, 1).p_t_ge_t));
    }
    if (law.is_poisson()) {
        for (std::uint64_t t = 1; t <= max_t; ++t) {
            ValidationRow r{"E[Z_t]", instance, 0, t, 0};
            r.empirical = sum[t] / nt;
            r.bound = std::pow(rho, static_cast<double>(t));
            // Var Z_t = rho^t (1 - rho^t) / (1 - rho) for Poisson(rho) offspring (rho^t t at rho = 1).
            const double var = rho == 1.0 ? static_cast<double>(t)
                                          : r.bound * (1.0 - r.bound) / (1.0 - rho);
            r.standard_error = std::sqrt(var / nt);
            r.check = "two_sided";
            r.violated = std::fabs(r.empirical - r.bound) > 3.0 * r.standard_error;
            out.rows.push_back(r);
        }
    }
    if (rho < 1.0) {
        ValidationRow r{"E[X_t]", instance, 0, max_t, 0};
        r.empirical = lineage_sum / nt;
        r.bound = *detail::bounds_or_zero(rho, max_t, 1).e_xt;
        const double var = std::max(0.0, lineage_sq / nt - r.empirical * r.empirical);
        r.standard_error = std::sqrt(var / nt);
        r.violated = r.empirical > r.bound + 3.0 * r.standard_error;
        out.rows.push_back(r);
    }
    return out;
}

/// Monte Carlo check of P(sum_j Z_{t,j} >= k | Z_0 = e_h) against tail_bound
/// on the grid hs x ts x ks. Start type h uses stream (seed, h).
inline std::vector<ValidationRow> run_multitype_validation(const MeanMatrix& m, const std::vector<std::size_t>& hs,
                                                           const std::vector<std::uint64_t>& ts,
                                                           const std::vector<std::uint64_t>& ks, std::uint64_t trials,
                                                           std::uint64_t seed, std::size_t jobs = default_jobs()) {
    if (trials == 0 || ts.empty()) {
        throw DomainError("validation needs at least one trial and one generation");
    }
    const PerronResult pr = perron(m);
    const std::uint64_t max_t = *std::max_element(ts.begin(), ts.end());
    // hits[h][t][k]
    std::vector<std::vector<std::vector<std::uint64_t>>> hits(
        hs.size(), std::vector<std::vector<std::uint64_t>>(ts.size(), std::vector<std::uint64_t>(ks.size(), 0)));
    parallel_for(hs.size(), jobs, [&](std::size_t hi) {
        RandomSource rng = derive_stream(seed, hs[hi]);
        for (std::uint64_t trial = 0; trial < trials; ++trial) {
            const auto traj = simulate_multitype(m, hs[hi], max_t, rng);
            for (std::size_t ti = 0; ti < ts.size(); ++ti) {
                const std::uint64_t total = ts[ti] < traj.size() ? total_size(traj[ts[ti]]) : 0;
                for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                    hits[hi][ti][ki] += total >= ks[ki] ? 1 : 0;
                }
            }
        }
    });
    std::ostringstream inst;
    inst << "multitype(d=" << m.dimension() << ";rho=" << detail::fmt_double(pr.rho) << ")";
    std::vector<ValidationRow> rows;
    for (std::size_t hi = 0; hi < hs.size(); ++hi) {
        for (std::size_t ti = 0; ti < ts.size(); ++ti) {
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                rows.push_back(detail::probability_row("P(sum Z_t>=k)", inst.str(), hs[hi], ts[ti], ks[ki],
                                                       hits[hi][ti][ki], trials,
                                                       tail_bound(pr, hs[hi], ts[ti], ks[ki])));
            }
        }
    }
    return rows;
}

inline void write_validation_csv(const std::vector<ValidationRow>& rows, std::ostream& out) {
    out << csv_schema_line << '\n';
    out << "quantity,instance,h,t,k,empirical,bound,standard_error,check,violated\n";
    for (const auto& r : rows) {
        out << r.quantity << ',' << r.instance << ',' << r.h << ',' << r.t << ',' << r.k << ','
            << detail::fmt_double(r.empirical) << ',' << detail::fmt_double(r.bound) << ','
            << detail::fmt_double(r.standard_error) << ',' << r.check << ',' << (r.violated ? 1 : 0) << '\n';
    }
}

inline void write_batch_csv(const std::vector<BatchRow>& rows, std::ostream& out) {
    out << csv_schema_line << '\n' << "trial,extinction_time,max_width,total_born\n";
    for (const auto& r : rows) {
        out << r.trial << ',' << (r.extinction_time ? std::to_string(*r.extinction_time) : "censored") << ','
            << r.max_width << ',' << r.total_born << '\n';
    }
}

// ---------------------------------------------------------------------------
// Spectral report
// ---------------------------------------------------------------------------

struct SpectralReport {
    std::size_t d = 0;
    double rho = 0.0;
    std::optional<double> frobenius_bound;
    double phi = 0.0;
    double kappa = 0.0;
    double q = 0.0;
    double r = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// Builds the mean matrix (choosing phi when not given) and evaluates the
/// Perron root together with the analytic bound. frobenius_bound is empty
/// when phi violates the bound's precondition.
inline SpectralReport spectral_report(std::size_t n, double eta, double chi, double kappa,
                                      std::optional<double> phi = std::nullopt, LogBase base = LogBase::Two) {
    SpectralReport rep;
    rep.kappa = kappa;
    rep.phi = phi ? *phi : choose_phi(eta, chi, kappa);
    const auto m = build_mean_matrix(n, eta, chi, kappa, rep.phi, base);
    const auto pr = perron(m);
    const auto c = lemma6_constants(eta, kappa, rep.phi);
    rep.d = m.dimension();
    rep.rho = pr.rho;
    rep.q = c.q;
    rep.r = c.r;
    rep.residual = pr.residual;
    rep.iterations = pr.iterations;
    if (rep.phi < phi_limit(eta, kappa, rep.phi)) {
        rep.frobenius_bound = frobenius_bound(n, eta, chi, kappa, rep.phi);
    }
    return rep;
}

inline nlohmann::json to_json(const SpectralReport& r) {
    nlohmann::json j = {{"d", r.d},         {"rho", r.rho}, {"phi", r.phi},           {"kappa", r.kappa},
                        {"q", r.q},         {"r", r.r},     {"residual", r.residual}, {"iterations", r.iterations},
                        {"frobenius_bound", nullptr}};
    if (r.frobenius_bound) {
        j["frobenius_bound"] = *r.frobenius_bound;
    }
    return j;
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& dst) {
    if (j.contains(key) && !j.at(key).is_null()) {
        dst = j.at(key).get<T>();
    }
}

} // namespace detail

/// Reads EaConfig fields (n, lambda, eta, chi, budget_evaluations, seed);
/// missing keys keep the values already in `base`.
inline EaConfig ea_config_from_json(const nlohmann::json& j, EaConfig base = {}) {
    detail::read_if(j, "n", base.n);
    detail::read_if(j, "lambda", base.lambda);
    detail::read_if(j, "eta", base.eta);
    detail::read_if(j, "chi", base.chi);
    detail::read_if(j, "budget_evaluations", base.budget_evaluations);
    detail::read_if(j, "seed", base.seed);
    return base;
}

inline SelPresParams selpres_from_json(const nlohmann::json& j, SelPresParams base) {
    double sigma = base.sigma();
    double delta = base.delta();
    int k = base.k();
    detail::read_if(j, "sigma", sigma);
    detail::read_if(j, "delta", delta);
    detail::read_if(j, "k", k);
    return SelPresParams(sigma, delta, k);
}

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j, SweepSpec base = {}) {
    detail::read_if(j, "chi_grid", base.chi_grid);
    detail::read_if(j, "eta_grid", base.eta_grid);
    if (j.contains("selpres")) {
        base.selpres = selpres_from_json(j.at("selpres"), base.selpres);
    }
    detail::read_if(j, "n", base.n);
    detail::read_if(j, "lambda", base.lambda);
    detail::read_if(j, "budget_evaluations", base.budget_evaluations);
    detail::read_if(j, "trials_per_point", base.trials_per_point);
    detail::read_if(j, "base_seed", base.base_seed);
    detail::read_if(j, "epsilon", base.epsilon);
    detail::read_if(j, "balanced_band", base.balanced_band);
    return base;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open configuration file " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("malformed configuration " + path.string() + ": " + e.what());
    }
}

} // namespace mutsel
