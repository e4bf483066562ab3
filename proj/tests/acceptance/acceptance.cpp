// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <mutsel/mutsel.hpp>

using namespace mutsel;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
    std::printf("criterion %d [%s]: %s (%.1fs) %s\n", id, name.c_str(), ok ? "PASS" : "FAIL", seconds,
                detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

double elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// --- criterion 1 -------------------------------------------------------------

EaConfig equilibrium_config() {
    EaConfig c;
    c.n = 400;
    c.lambda = 400;
    c.eta = 1.5;
    c.chi = 1.0;
    c.seed = 1;
    return c;
}

const std::vector<double> equilibrium_gammas{0.25, 0.5, 0.75};

EquilibriumResult equilibrium_run() {
    return run_equilibrium_experiment(equilibrium_config(), equilibrium_gammas, 3000, 20);
}

std::string csv_of(const EquilibriumResult& r) {
    std::ostringstream os;
    write_equilibrium_csv(r, os);
    return os.str();
}

// --- criterion 2 -------------------------------------------------------------

constexpr std::uint64_t phase_seed = 1;

struct PhaseResult {
    std::vector<SweepCell> balanced_and_low; // (2 ln 2, 2), (2 ln 2, 1.1)
    std::vector<SweepCell> high;             // (0.1, 1.5)
};

SweepSpec phase_spec(std::vector<double> chis, std::vector<double> etas) {
    SweepSpec s;
    s.chi_grid = std::move(chis);
    s.eta_grid = std::move(etas);
    s.selpres = SelPresParams(0.5, 0.05, 1);
    s.n = 60;
    s.lambda = 60;
    s.budget_evaluations = 10'000'000;
    s.trials_per_point = 10;
    s.base_seed = phase_seed;
    return s;
}

PhaseResult phase_run() {
    PhaseResult r;
    r.balanced_and_low = run_sweep(phase_spec({2.0 * std::log(2.0)}, {2.0, 1.1}));
    r.high = run_sweep(phase_spec({0.1}, {1.5}));
    return r;
}

std::string csv_of(const PhaseResult& r) {
    std::ostringstream os;
    write_sweep_csv(r.balanced_and_low, os);
    write_sweep_csv(r.high, os);
    return os.str();
}

std::string cell_text(const SweepCell& c) {
    std::ostringstream os;
    os << "(chi=" << detail::fmt_double(c.chi) << ", eta=" << c.eta << "): " << c.successes << "/" << c.trials
       << " [" << to_string(c.verdict.regime) << "]";
    return os.str();
}

} // namespace

int main() {
    using clock = std::chrono::steady_clock;
    std::printf("acceptance suite, %zu worker thread(s)\n", default_jobs());

    // 1. Equilibrium position.
    auto t0 = clock::now();
    const EquilibriumResult eq = equilibrium_run();
    {
        const auto med = eq.median_empirical_by_gamma();
        bool ok = med.size() == 3;
        std::ostringstream d;
        d.precision(4);
        for (const auto& [g, m] : med) {
            const double xi = equilibrium_position(g, 1.5, 1.0);
            std::size_t within = 0;
            for (const auto& row : eq.rows) {
                within += row.report.gamma == g && row.report.deviation <= 0.05 ? 1 : 0;
            }
            ok = ok && std::fabs(m - xi) <= 0.05;
            d << "gamma=" << g << " median=" << m << " xi*=" << xi << " seeds_within=" << within << "/20; ";
        }
        const bool ordered = med.size() == 3 && med[0].second > med[1].second && med[1].second > med[2].second;
        d << (ordered ? "order preserved" : "order violated");
        report(1, "equilibrium position", ok && ordered, d.str(), elapsed(t0));
    }

    // 2. Phase transition.
    t0 = clock::now();
    const PhaseResult phase = phase_run();
    {
        const auto& bal = phase.balanced_and_low[0];
        const auto& low = phase.balanced_and_low[1];
        const auto& high = phase.high[0];
        const bool ok = bal.error.empty() && low.error.empty() && high.error.empty() &&
                        10 * bal.successes >= 6 * bal.trials && low.successes == 0 && high.successes == 0;
        report(2, "phase transition", ok,
               cell_text(bal) + " need >=60%; " + cell_text(low) + " need 0; " + cell_text(high) +
                   " need 0; base_seed=" + std::to_string(phase_seed),
               elapsed(t0));
    }

    // 3. Sampler exactness.
    t0 = clock::now();
    {
        constexpr std::size_t draws = 1'000'000;
        const double band = std::sqrt(std::log(2.0 / 0.001) / (2.0 * draws));
        bool ok = true;
        std::ostringstream d;
        d << "band=" << band << ";";
        const std::pair<std::size_t, double> cases[] = {{10, 1.2}, {1000, 1.5}, {100, 2.0}};
        for (const auto& [lambda, eta] : cases) {
            const auto dist = build_rank_distribution(lambda, eta);
            auto rng = derive_stream(3, lambda);
            std::vector<std::size_t> counts(lambda + 1, 0);
            for (std::size_t i = 0; i < draws; ++i) {
                ++counts[sample_rank(dist, rng)];
            }
            double worst = 0.0;
            std::size_t cum = 0;
            for (std::size_t i = 1; i <= lambda; ++i) {
                cum += counts[i];
                worst = std::max(worst, std::fabs(static_cast<double>(cum) / draws - dist.cumulative(i)));
            }
            ok = ok && worst <= band;
            d << " (" << lambda << "," << eta << ") max|F-beta|=" << worst;
        }
        report(3, "sampler exactness", ok, d.str(), elapsed(t0));
    }

    // 4. Lemma 1.
    t0 = clock::now();
    {
        auto rng = derive_stream(4, 0);
        std::size_t bad = 0;
        double worst = INFINITY;
        for (int i = 0; i < 100000; ++i) {
            const double gamma = 1e-12 + rng.uniform() * (1.0 - 2e-12);
            const double x = 1.0 + rng.uniform() * 99.0;
            const double eta = 1.0 + 1e-9 + rng.uniform() * (1.0 - 1e-9);
            bad += check_beta_ratio(gamma, x, eta) ? 0 : 1;
            worst = std::min(worst, beta(gamma / x, eta) / beta(gamma, eta) - 1.0 / x);
        }
        std::ostringstream d;
        d << "violations=" << bad << "/100000, min(ratio - 1/x)=" << worst;
        report(4, "Lemma 1 ratio", bad == 0, d.str(), elapsed(t0));
    }

    // 5. Single-type branching.
    t0 = clock::now();
    {
        bool ok = true;
        std::ostringstream d;
        for (double rho : {0.3, 0.5, 0.9}) {
            const auto v = run_single_type_validation(OffspringLaw::poisson(rho), 10, {1, 2, 4}, 1'000'000,
                                                      static_cast<std::uint64_t>(rho * 100));
            std::size_t violated = 0;
            double worst_mean_z = 0.0;
            for (const auto& r : v.rows) {
                violated += r.violated ? 1 : 0;
                if (r.quantity == "E[Z_t]") {
                    worst_mean_z = std::max(worst_mean_z, std::fabs(r.empirical - r.bound) / r.standard_error);
                }
            }
            ok = ok && violated == 0;
            d << "rho=" << rho << ": " << violated << "/" << v.rows.size()
              << " rows violated, max |mean Z_t - rho^t|/se=" << worst_mean_z << "; ";
        }
        report(5, "single-type branching", ok, d.str(), elapsed(t0));
    }

    // 6. Perron machinery.
    t0 = clock::now();
    {
        bool ok = true;
        std::size_t points = 0;
        std::size_t ratio_checks = 0;
        double max_rho_over_bound = 0.0;
        double max_bound = 0.0;
        double max_residual = 0.0;
        std::ostringstream d;
        for (std::size_t n : {100, 400, 1000}) {
            for (double eta : {1.2, 1.5, 2.0}) {
                for (double kappa : {2.0, 4.0, 9.0}) {
                    const double chi = 1.0;
                    const double phi = choose_phi(eta, chi, kappa);
                    const auto m = build_mean_matrix(n, eta, chi, kappa, phi);
                    const auto p = perron(m);
                    const double bound = frobenius_bound(n, eta, chi, kappa, phi);
                    const bool point_ok = p.rho < bound && bound < 1.0 && p.residual <= 1e-10;
                    if (!point_ok) {
                        d << "fails at (n=" << n << ", eta=" << eta << ", kappa=" << kappa << "): rho=" << p.rho
                          << " bound=" << bound << "; ";
                    }
                    ok = ok && point_ok;
                    max_rho_over_bound = std::max(max_rho_over_bound, p.rho / bound);
                    max_bound = std::max(max_bound, bound);
                    max_residual = std::max(max_residual, p.residual);
                    ++points;
                    if (n == 100) {
                        for (std::size_t h = 1; h <= m.dimension(); ++h) {
                            const bool r_ok = std::log(p.v[h - 1] / p.v_star) <= eigen_ratio_bound(h, n, chi, phi);
                            ok = ok && r_ok;
                            ++ratio_checks;
                        }
                    }
                }
            }
        }
        d << points << " grid points, max rho/bound=" << max_rho_over_bound << ", max bound=" << max_bound
          << ", max residual=" << max_residual << ", eigen-ratio checks=" << ratio_checks;
        report(6, "Perron machinery", ok, d.str(), elapsed(t0));
    }

    // 7. Multi-type tail.
    t0 = clock::now();
    {
        const auto m = build_mean_matrix(55, 1.5, 1.0, 4.0, 1.2);
        const auto rows = run_multitype_validation(m, {1, m.dimension()}, {1, 3, 5}, {1, 2, 4}, 1'000'000, 7);
        std::size_t violated = 0;
        double max_ratio = 0.0;
        for (const auto& r : rows) {
            violated += r.violated ? 1 : 0;
            max_ratio = std::max(max_ratio, r.empirical / r.bound);
        }
        std::ostringstream d;
        d << "d=" << m.dimension() << " rho=" << perron(m).rho << ", " << violated << "/" << rows.size()
          << " grid points violated, max empirical/bound=" << max_ratio;
        report(7, "multi-type tail", violated == 0 && m.dimension() == 10, d.str(), elapsed(t0));
    }

    // 8. Accounting on every run of criteria 1 and 2.
    {
        bool ok = eq.accounting_ok && eq.runs == 20;
        std::size_t runs = eq.runs;
        for (const auto* cells : {&phase.balanced_and_low, &phase.high}) {
            for (const auto& c : *cells) {
                ok = ok && c.accounting_ok;
                runs += c.trials;
            }
        }
        report(8, "accounting invariant", ok, "lambda(tau-1) <= T <= lambda tau on " + std::to_string(runs) + " runs",
               0.0);
    }

    // 9. Determinism: rerun criteria 1 and 2.
    t0 = clock::now();
    {
        const bool eq_same = csv_of(equilibrium_run()) == csv_of(eq);
        const bool phase_same = csv_of(phase_run()) == csv_of(phase);
        report(9, "determinism", eq_same && phase_same,
               std::string("equilibrium CSV ") + (eq_same ? "identical" : "differs") + ", sweep CSV " +
                   (phase_same ? "identical" : "differs"),
               elapsed(t0));
    }

    std::printf("%d criterion/criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
