// mutsel: command line front end for the Linear Ranking EA toolkit.
//
// Subcommands: run, sweep, equilibrium, branching, spectral.
// Values are resolved as built-in defaults < --config JSON < command line flags.
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include <mutsel/mutsel.hpp>

namespace {

using nlohmann::json;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = mutsel::default_jobs();
    std::string out;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "JSON configuration file");
    sub->add_option("--seed", f.seed, "Seed (overrides the configuration)");
    sub->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", f.out, "Output path (default: stdout)");
}

json load_config(const CommonFlags& f) { return f.config.empty() ? json::object() : mutsel::load_json_file(f.config); }

/// Writes through `emit` to --out or stdout.
template <typename Emit>
void with_output(const CommonFlags& f, Emit&& emit) {
    if (f.out.empty()) {
        emit(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(f.out, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file " + f.out);
    }
    emit(out);
    if (!out) {
        throw std::runtime_error("write failure on " + f.out);
    }
}

template <typename T>
void override_if(const std::optional<T>& flag, T& dst) {
    if (flag) {
        dst = *flag;
    }
}

// --- run ---------------------------------------------------------------------

struct RunFlags {
    CommonFlags common;
    std::optional<std::size_t> n, lambda, stride;
    std::optional<double> eta, chi, sigma, delta;
    std::optional<int> k;
    std::optional<std::uint64_t> budget;
    std::optional<std::string> objective;
    std::vector<double> gammas;
};

void cmd_run(const RunFlags& f) {
    const json cfg = load_config(f.common);
    mutsel::EaConfig c = mutsel::ea_config_from_json(cfg);
    override_if(f.n, c.n);
    override_if(f.lambda, c.lambda);
    override_if(f.eta, c.eta);
    override_if(f.chi, c.chi);
    override_if(f.budget, c.budget_evaluations);
    override_if(f.common.seed, c.seed);
    mutsel::validate_config(c);

    std::string objective = cfg.value("objective", std::string("selpres"));
    override_if(f.objective, objective);
    mutsel::SelPresParams sp(0.5, 0.05, 1);
    if (cfg.contains("selpres")) {
        sp = mutsel::selpres_from_json(cfg.at("selpres"), sp);
    }
    double sigma = sp.sigma();
    double delta = sp.delta();
    int k = sp.k();
    override_if(f.sigma, sigma);
    override_if(f.delta, delta);
    override_if(f.k, k);

    mutsel::RunOptions opts;
    opts.tracked_gammas = cfg.value("tracked_gammas", std::vector<double>{0.25, 0.5, 0.75});
    if (!f.gammas.empty()) {
        opts.tracked_gammas = f.gammas;
    }
    opts.record_stride = cfg.value("record_stride", std::size_t{0});
    override_if(f.stride, opts.record_stride);

    const auto obj = objective == "leading_ones"
                         ? mutsel::Objective::leading_ones(c.n)
                         : objective == "selpres" ? mutsel::Objective::selpres(c.n, mutsel::SelPresParams(sigma, delta, k))
                                                  : throw mutsel::DomainError("objective must be 'selpres' or 'leading_ones'");
    mutsel::RandomSource rng = mutsel::derive_stream(c.seed, 0);
    const auto rec = mutsel::run(c, obj, opts, rng);
    with_output(f.common, [&](std::ostream& os) { mutsel::write_run_jsonl(rec, os); });
}

// --- sweep -------------------------------------------------------------------

struct SweepFlags {
    CommonFlags common;
    std::vector<double> chi_grid, eta_grid;
    std::optional<std::size_t> n, lambda, trials;
    std::optional<std::uint64_t> budget;
    std::string plot;
};

void cmd_sweep(const SweepFlags& f) {
    mutsel::SweepSpec spec = mutsel::sweep_spec_from_json(load_config(f.common));
    if (!f.chi_grid.empty()) {
        spec.chi_grid = f.chi_grid;
    }
    if (!f.eta_grid.empty()) {
        spec.eta_grid = f.eta_grid;
    }
    override_if(f.n, spec.n);
    override_if(f.lambda, spec.lambda);
    override_if(f.trials, spec.trials_per_point);
    override_if(f.budget, spec.budget_evaluations);
    override_if(f.common.seed, spec.base_seed);
    mutsel::check_sweep_spec(spec);
    const auto cells = mutsel::run_sweep(spec, f.common.jobs);
    with_output(f.common, [&](std::ostream& os) { mutsel::write_sweep_csv(cells, os); });
    if (!f.plot.empty()) {
        mutsel::emit_phase_plot_data(cells, f.plot, spec.selpres, spec.epsilon);
    }
}

// --- equilibrium -------------------------------------------------------------

struct EquilibriumFlags {
    CommonFlags common;
    std::optional<std::size_t> n, lambda, seeds;
    std::optional<double> eta, chi, window;
    std::optional<std::uint64_t> generations;
    std::vector<double> gammas;
};

void cmd_equilibrium(const EquilibriumFlags& f) {
    const json cfg = load_config(f.common);
    mutsel::EaConfig c;
    c.n = 400;
    c.lambda = 400;
    c = mutsel::ea_config_from_json(cfg, c);
    override_if(f.n, c.n);
    override_if(f.lambda, c.lambda);
    override_if(f.eta, c.eta);
    override_if(f.chi, c.chi);
    override_if(f.common.seed, c.seed);
    auto gammas = cfg.value("gammas", std::vector<double>{0.25, 0.5, 0.75});
    if (!f.gammas.empty()) {
        gammas = f.gammas;
    }
    std::uint64_t generations = cfg.value("generations", std::uint64_t{3000});
    override_if(f.generations, generations);
    std::size_t seeds = cfg.value("seeds", std::size_t{20});
    override_if(f.seeds, seeds);
    double window = cfg.value("window_fraction", 1.0 / 3.0);
    override_if(f.window, window);
    const auto result = mutsel::run_equilibrium_experiment(c, gammas, generations, seeds, f.common.jobs, window);
    with_output(f.common, [&](std::ostream& os) { mutsel::write_equilibrium_csv(result, os); });
}

// --- branching ---------------------------------------------------------------

struct BranchingFlags {
    CommonFlags common;
    std::optional<std::string> mode, law;
    std::optional<double> rho;
    std::optional<std::uint64_t> trials, max_t;
    std::string trajectories;
};

mutsel::OffspringLaw law_from(const std::string& kind, double rho, const json& cfg) {
    if (kind == "poisson") {
        return mutsel::OffspringLaw::poisson(rho);
    }
    if (kind == "bernoulli") {
        return mutsel::OffspringLaw::bernoulli(rho);
    }
    if (kind == "table") {
        return mutsel::OffspringLaw::table(cfg.at("law").at("probabilities").get<std::vector<double>>());
    }
    throw mutsel::DomainError("law must be 'poisson', 'bernoulli' or 'table'");
}

mutsel::MeanMatrix matrix_from(const json& m) {
    if (m.contains("entries")) {
        const auto rows = m.at("entries").get<std::vector<std::vector<double>>>();
        std::vector<double> flat;
        for (const auto& r : rows) {
            if (r.size() != rows.size()) {
                throw mutsel::DomainError("explicit matrix must be square");
            }
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return mutsel::MeanMatrix(rows.size(), std::move(flat));
    }
    const auto base = m.value("log_base", std::string("2")) == "e" ? mutsel::LogBase::Natural : mutsel::LogBase::Two;
    return mutsel::build_mean_matrix(m.value("n", std::size_t{55}), m.value("eta", 1.5), m.value("chi", 1.0),
                                     m.value("kappa", 4.0), m.value("phi", 1.2), base);
}

void cmd_branching(const BranchingFlags& f) {
    const json cfg = load_config(f.common);
    std::string mode = cfg.value("mode", std::string("single"));
    override_if(f.mode, mode);
    std::uint64_t trials = cfg.value("trials", std::uint64_t{100000});
    override_if(f.trials, trials);
    std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
    override_if(f.common.seed, seed);
    const auto ks = cfg.value("k", std::vector<std::uint64_t>{1, 2, 4});

    std::vector<mutsel::ValidationRow> rows;
    if (mode == "single") {
        const json law_cfg = cfg.value("law", json::object());
        std::string kind = law_cfg.value("kind", std::string("poisson"));
        override_if(f.law, kind);
        double rho = law_cfg.value("rho", 0.5);
        override_if(f.rho, rho);
        std::uint64_t max_t = cfg.value("max_t", std::uint64_t{10});
        override_if(f.max_t, max_t);
        const auto v = mutsel::run_single_type_validation(law_from(kind, rho, cfg), max_t, ks, trials, seed,
                                                          !f.trajectories.empty());
        rows = v.rows;
        if (!f.trajectories.empty()) {
            std::ofstream tout(f.trajectories, std::ios::binary);
            if (!tout) {
                throw std::runtime_error("cannot open " + f.trajectories);
            }
            mutsel::write_batch_csv(v.batch, tout);
        }
    } else if (mode == "multitype") {
        const auto m = matrix_from(cfg.value("matrix", json::object()));
        auto hs = cfg.value("h", std::vector<std::size_t>{1, m.dimension()});
        const auto ts = cfg.value("t", std::vector<std::uint64_t>{1, 3, 5});
        rows = mutsel::run_multitype_validation(m, hs, ts, ks, trials, seed, f.common.jobs);
    } else {
        throw mutsel::DomainError("mode must be 'single' or 'multitype'");
    }
    with_output(f.common, [&](std::ostream& os) { mutsel::write_validation_csv(rows, os); });
}

// --- spectral ----------------------------------------------------------------

struct SpectralFlags {
    CommonFlags common;
    std::optional<std::size_t> n;
    std::optional<double> eta, chi, kappa, phi;
    std::optional<std::string> log_base;
};

void cmd_spectral(const SpectralFlags& f) {
    const json cfg = load_config(f.common);
    std::size_t n = cfg.value("n", std::size_t{100});
    double eta = cfg.value("eta", 1.5);
    double chi = cfg.value("chi", 1.0);
    double kappa = cfg.value("kappa", 4.0);
    std::optional<double> phi;
    if (cfg.contains("phi") && !cfg.at("phi").is_null()) {
        phi = cfg.at("phi").get<double>();
    }
    std::string base = cfg.value("log_base", std::string("2"));
    override_if(f.n, n);
    override_if(f.eta, eta);
    override_if(f.chi, chi);
    override_if(f.kappa, kappa);
    if (f.phi) {
        phi = f.phi;
    }
    override_if(f.log_base, base);
    if (base != "2" && base != "e") {
        throw mutsel::DomainError("log_base must be '2' or 'e'");
    }
    const auto rep = mutsel::spectral_report(n, eta, chi, kappa, phi,
                                             base == "e" ? mutsel::LogBase::Natural : mutsel::LogBase::Two);
    with_output(f.common, [&](std::ostream& os) { os << mutsel::to_json(rep).dump(2) << '\n'; });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear Ranking EA experimentation toolkit"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Single EA run, JSON-lines trace");
    add_common(run, run_flags.common);
    run->add_option("--objective", run_flags.objective, "selpres or leading_ones");
    run->add_option("--n", run_flags.n);
    run->add_option("--lambda", run_flags.lambda);
    run->add_option("--eta", run_flags.eta);
    run->add_option("--chi", run_flags.chi);
    run->add_option("--budget", run_flags.budget, "Evaluation budget");
    run->add_option("--sigma", run_flags.sigma);
    run->add_option("--delta", run_flags.delta);
    run->add_option("--k", run_flags.k);
    run->add_option("--gamma", run_flags.gammas, "Tracked γ values");
    run->add_option("--stride", run_flags.stride, "Snapshot stride");

    SweepFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "(χ, η) grid sweep on SelPres, CSV");
    add_common(sweep, sweep_flags.common);
    sweep->add_option("--chi-grid", sweep_flags.chi_grid);
    sweep->add_option("--eta-grid", sweep_flags.eta_grid);
    sweep->add_option("--n", sweep_flags.n);
    sweep->add_option("--lambda", sweep_flags.lambda);
    sweep->add_option("--trials", sweep_flags.trials);
    sweep->add_option("--budget", sweep_flags.budget);
    sweep->add_option("--plot", sweep_flags.plot, "Also write heatmap and boundary CSVs");

    EquilibriumFlags eq_flags;
    auto* eq = app.add_subcommand("equilibrium", "Equilibrium position experiment on LeadingOnes, CSV");
    add_common(eq, eq_flags.common);
    eq->add_option("--n", eq_flags.n);
    eq->add_option("--lambda", eq_flags.lambda);
    eq->add_option("--eta", eq_flags.eta);
    eq->add_option("--chi", eq_flags.chi);
    eq->add_option("--gamma", eq_flags.gammas);
    eq->add_option("--generations", eq_flags.generations);
    eq->add_option("--seeds", eq_flags.seeds);
    eq->add_option("--window", eq_flags.window, "Trailing window fraction");

    BranchingFlags br_flags;
    auto* br = app.add_subcommand("branching", "Branching-process Monte Carlo vs analytic bounds, CSV");
    add_common(br, br_flags.common);
    br->add_option("--mode", br_flags.mode, "single or multitype");
    br->add_option("--law", br_flags.law, "poisson, bernoulli or table");
    br->add_option("--rho", br_flags.rho);
    br->add_option("--trials", br_flags.trials);
    br->add_option("--max-t", br_flags.max_t);
    br->add_option("--trajectories", br_flags.trajectories, "Per-trajectory batch CSV (single mode)");

    SpectralFlags sp_flags;
    auto* sp = app.add_subcommand("spectral", "Mean matrix Perron root and bounds, JSON");
    add_common(sp, sp_flags.common);
    sp->add_option("--n", sp_flags.n);
    sp->add_option("--eta", sp_flags.eta);
    sp->add_option("--chi", sp_flags.chi);
    sp->add_option("--kappa", sp_flags.kappa);
    sp->add_option("--phi", sp_flags.phi, "Defaults to the automatically chosen φ");
    sp->add_option("--log-base", sp_flags.log_base, "2 or e");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            cmd_run(run_flags);
        } else if (*sweep) {
            cmd_sweep(sweep_flags);
        } else if (*eq) {
            cmd_equilibrium(eq_flags);
        } else if (*br) {
            cmd_branching(br_flags);
        } else if (*sp) {
            cmd_spectral(sp_flags);
        }
    } catch (const mutsel::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
