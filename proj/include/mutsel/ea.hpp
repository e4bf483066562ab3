#pragma once

/// @file ea.hpp
/// @brief The non-elitist Linear Ranking EA with per-generation instrumentation.
///
/// Each generation sorts the population by fitness (best first, ties kept in
/// previous order), then builds the next population from lambda independent
/// select-and-mutate steps. Every offspring is evaluated as it is created, and
/// the run stops at the first evaluation of a target string.
///
/// Accounting: tau counts evaluated populations including the initial one,
/// and T counts evaluations, so lambda(tau - 1) <= T <= lambda * tau.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "core.hpp"
#include "fitness.hpp"
#include "ranking.hpp"

namespace mutsel {

// ---------------------------------------------------------------------------
// Mutation
// ---------------------------------------------------------------------------

/// Flips each bit of x independently with probability `rate`, in place.
/// Positions are visited by geometric skipping, so the cost is proportional
/// to the number of flips.
inline void mutate_in_place(Bitstring& x, double rate, RandomSource& rng) {
    if (rate <= 0.0) {
        return;
    }
    if (rate >= 1.0) {
        x.complement();
        return;
    }
    const double log_keep = std::log1p(-rate);
    const std::size_t n = x.size();
    double pos = -1.0;
    for (;;) {
        pos += 1.0 + std::floor(std::log(rng.uniform_open_zero()) / log_keep);
        if (pos >= static_cast<double>(n)) {
            break;
        }
        x.flip_index(static_cast<std::size_t>(pos));
    }
}

/// Standard bit mutation with rate chi/n. x is left untouched.
inline Bitstring mutate(const Bitstring& x, const MutationParams& mp, RandomSource& rng) {
    Bitstring y = x;
    mutate_in_place(y, mp.rate(x.size()), rng);
    return y;
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

struct GenerationSnapshot {
    std::uint64_t t = 0;
    /// (gamma, leading ones of the gamma-ranked individual), ascending gamma.
    std::vector<std::pair<double, std::size_t>> gamma_ranked_leading_ones;
    /// Gamma used for the fitness partition and the potential.
    double partition_gamma = 0.0;
    std::size_t lambda_plus = 0;
    std::size_t lambda_zero = 0;
    std::size_t lambda_minus = 0;
    std::int64_t potential_h = 0;
    double fraction_1k3 = 0.0;
    Fitness best_fitness = 0;

    [[nodiscard]] std::optional<std::size_t> leading_ones_at(double gamma) const {
        for (const auto& [g, l] : gamma_ranked_leading_ones) {
            if (std::fabs(g - gamma) <= 1e-12) {
                return l;
            }
        }
        return std::nullopt;
    }

    friend bool operator==(const GenerationSnapshot&, const GenerationSnapshot&) = default;
};

enum class Outcome { OptimumFound, BudgetExhausted };

inline const char* to_string(Outcome o) noexcept {
    return o == Outcome::OptimumFound ? "OptimumFound" : "BudgetExhausted";
}

struct RunRecord {
    EaConfig config;
    std::string objective;
    Outcome outcome = Outcome::BudgetExhausted;
    std::uint64_t generations = 0; // tau
    std::uint64_t evaluations = 0; // T
    std::vector<double> tracked_gammas;
    std::size_t record_stride = 1;
    std::vector<GenerationSnapshot> snapshots;
    Bitstring final_best{1};

    [[nodiscard]] bool accounting_holds() const noexcept {
        const std::uint64_t l = config.lambda;
        return generations >= 1 && l * (generations - 1) <= evaluations && evaluations <= l * generations;
    }

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunOptions {
    std::vector<double> tracked_gammas{0.5};
    /// 0 selects the default: 1 for n <= 500, else 10.
    std::size_t record_stride = 0;
    /// Replaces the uniformly sampled generation 0 (test hook).
    std::optional<std::vector<Bitstring>> initial_population;
};

inline std::size_t default_record_stride(std::size_t n) noexcept { return n <= 500 ? 1 : 10; }

/// 1-based position of the gamma-ranked individual, ceil(gamma * lambda).
inline std::size_t gamma_rank(double gamma, std::size_t lambda) noexcept {
    const auto r = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(lambda) - 1e-9));
    return std::clamp<std::size_t>(r, 1, lambda);
}

/// Potential h = h_y + lambda * h_x of a population sorted best-first:
/// h_y = ceil(gamma lambda) - #{y : f(y) > f(x_gamma)}, h_x = n - LeadingOnes(x_gamma).
inline std::int64_t compute_potential(const std::vector<Bitstring>& sorted_population,
                                      const std::vector<Fitness>& sorted_fitness, double gamma, std::size_t n) {
    const std::size_t lambda = sorted_population.size();
    if (lambda == 0 || sorted_fitness.size() != lambda) {
        throw DomainError("potential requires a non-empty population with matching fitness values");
    }
    const std::size_t pos = gamma_rank(gamma, lambda);
    const Fitness f0 = sorted_fitness[pos - 1];
    const auto plus = static_cast<std::int64_t>(
        std::count_if(sorted_fitness.begin(), sorted_fitness.end(), [f0](Fitness f) { return f > f0; }));
    const auto hx = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(sorted_population[pos - 1].leading_ones());
    return (static_cast<std::int64_t>(pos) - plus) + static_cast<std::int64_t>(lambda) * hx;
}

/// Evaluates the objective on each member and returns the population sorted best-first.
inline std::pair<std::vector<Bitstring>, std::vector<Fitness>> sort_population(std::vector<Bitstring> population,
                                                                               const Objective& objective) {
    std::vector<Fitness> fit;
    fit.reserve(population.size());
    for (const auto& x : population) {
        fit.push_back(objective.evaluate(x));
    }
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    std::vector<Bitstring> sorted_pop;
    std::vector<Fitness> sorted_fit;
    for (auto i : order) {
        sorted_pop.push_back(population[i]);
        sorted_fit.push_back(fit[i]);
    }
    return {std::move(sorted_pop), std::move(sorted_fit)};
}

namespace detail {

inline GenerationSnapshot snapshot(std::uint64_t t, const std::vector<Bitstring>& pop, const std::vector<Fitness>& fit,
                                   const std::vector<std::size_t>& order, const std::vector<double>& gammas,
                                   std::size_t block) {
    const std::size_t lambda = pop.size();
    const std::size_t n = pop.front().size();
    GenerationSnapshot s;
    s.t = t;
    for (double g : gammas) {
        s.gamma_ranked_leading_ones.emplace_back(g, pop[order[gamma_rank(g, lambda) - 1]].leading_ones());
    }
    s.partition_gamma = gammas.back();
    const std::size_t pos = gamma_rank(s.partition_gamma, lambda);
    const Fitness f0 = fit[order[pos - 1]];
    for (std::size_t i = 0; i < lambda; ++i) {
        const Fitness f = fit[i];
        if (f > f0) {
            ++s.lambda_plus;
        } else if (f == f0) {
            ++s.lambda_zero;
        } else {
            ++s.lambda_minus;
        }
    }
    const auto hx = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(pop[order[pos - 1]].leading_ones());
    s.potential_h = static_cast<std::int64_t>(pos) - static_cast<std::int64_t>(s.lambda_plus) +
                    static_cast<std::int64_t>(lambda) * hx;
    if (block <= n) {
        std::size_t c = 0;
        for (const auto& x : pop) {
            c += x.count_range(1, block) == block ? 1 : 0;
        }
        s.fraction_1k3 = static_cast<double>(c) / static_cast<double>(lambda);
    }
    s.best_fitness = fit[order.front()];
    return s;
}

} // namespace detail

/// Runs the Linear Ranking EA until a target string is evaluated or the
/// evaluation budget cannot accommodate another full generation.
inline RunRecord run(const EaConfig& config, const Objective& objective, const RunOptions& options,
                     RandomSource& rng) {
    validate_config(config);
    if (objective.n() != config.n) {
        throw DomainError("objective length does not match configuration n");
    }
    std::vector<double> gammas = options.tracked_gammas;
    if (gammas.empty()) {
        throw DomainError("at least one tracked γ is required");
    }
    for (double g : gammas) {
        if (!(g > 0.0 && g <= 1.0)) {
            throw DomainError("tracked γ values must lie in (0, 1]");
        }
    }
    std::sort(gammas.begin(), gammas.end());
    gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());

    const std::size_t n = config.n;
    const std::size_t lambda = config.lambda;
    const std::size_t stride = options.record_stride == 0 ? default_record_stride(n) : options.record_stride;
    const double rate = config.mutation().rate(n);
    const RankDistribution ranks(lambda, config.eta);
    const std::size_t block = objective.block_length();

    RunRecord rec;
    rec.config = config;
    rec.objective = objective.name();
    rec.tracked_gammas = gammas;
    rec.record_stride = stride;

    std::vector<Bitstring> pop;
    std::vector<Fitness> fit(lambda);
    pop.reserve(lambda);
    if (options.initial_population) {
        if (options.initial_population->size() != lambda) {
            throw DomainError("initial population size must equal λ");
        }
        for (const auto& x : *options.initial_population) {
            if (x.size() != n) {
                throw DomainError("initial population member has wrong length");
            }
            pop.push_back(x);
        }
    } else {
        for (std::size_t i = 0; i < lambda; ++i) {
            pop.push_back(random_bitstring(n, rng));
        }
    }

    std::uint64_t evaluations = 0;
    for (std::size_t i = 0; i < lambda; ++i) {
        fit[i] = objective.evaluate(pop[i]);
        ++evaluations;
        if (objective.is_target(pop[i])) {
            rec.outcome = Outcome::OptimumFound;
            rec.generations = 1;
            rec.evaluations = evaluations;
            rec.final_best = pop[i];
            return rec;
        }
    }

    std::vector<Bitstring> next = pop;
    std::vector<Fitness> next_fit(lambda);
    std::vector<std::size_t> order(lambda);

    for (std::uint64_t t = 0;; ++t) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });

        if (t % stride == 0) {
            rec.snapshots.push_back(detail::snapshot(t, pop, fit, order, gammas, block));
        }

        if (config.budget_evaluations - evaluations < lambda) {
            rec.outcome = Outcome::BudgetExhausted;
            rec.generations = t + 1;
            rec.evaluations = evaluations;
            rec.final_best = pop[order.front()];
            return rec;
        }

        for (std::size_t i = 0; i < lambda; ++i) {
            const std::size_t r = ranks.sample(rng);
            next[i] = pop[order[r - 1]];
            mutate_in_place(next[i], rate, rng);
            next_fit[i] = objective.evaluate(next[i]);
            ++evaluations;
            if (objective.is_target(next[i])) {
                rec.outcome = Outcome::OptimumFound;
                rec.generations = t + 2;
                rec.evaluations = evaluations;
                rec.final_best = next[i];
                return rec;
            }
        }
        std::swap(pop, next);
        std::swap(fit, next_fit);
    }
}

/// Convenience overload mirroring the option fields.
inline RunRecord run(const EaConfig& config, const Objective& objective, std::vector<double> tracked_gammas,
                     std::size_t record_stride, RandomSource& rng) {
    RunOptions opts;
    opts.tracked_gammas = std::move(tracked_gammas);
    opts.record_stride = record_stride;
    return run(config, objective, opts, rng);
}

// ---------------------------------------------------------------------------
// JSON-lines trace
// ---------------------------------------------------------------------------

inline nlohmann::json config_to_json(const EaConfig& c) {
    return {{"n", c.n},     {"lambda", c.lambda}, {"eta", c.eta}, {"chi", c.chi}, {"budget_evaluations", c.budget_evaluations},
            {"seed", c.seed}};
}

inline nlohmann::json snapshot_to_json(const GenerationSnapshot& s) {
    nlohmann::json lo = nlohmann::json::array();
    for (const auto& [g, l] : s.gamma_ranked_leading_ones) {
        lo.push_back({{"gamma", g}, {"L", l}});
    }
    return {{"type", "snapshot"},
            {"t", s.t},
            {"leading_ones", lo},
            {"partition_gamma", s.partition_gamma},
            {"lambda_plus", s.lambda_plus},
            {"lambda_zero", s.lambda_zero},
            {"lambda_minus", s.lambda_minus},
            {"potential_h", s.potential_h},
            {"fraction_1k3", s.fraction_1k3},
            {"best_fitness", s.best_fitness}};
}

/// Header line, one line per snapshot, then a result line.
inline void write_run_jsonl(const RunRecord& rec, std::ostream& out) {
    nlohmann::json header = {{"type", "header"},
                             {"config", config_to_json(rec.config)},
                             {"objective", rec.objective},
                             {"tracked_gammas", rec.tracked_gammas},
                             {"record_stride", rec.record_stride}};
    out << header.dump() << '\n';
    for (const auto& s : rec.snapshots) {
        out << snapshot_to_json(s).dump() << '\n';
    }
    nlohmann::json result = {{"type", "result"},
                             {"outcome", to_string(rec.outcome)},
                             {"generations", rec.generations},
                             {"evaluations", rec.evaluations},
                             {"final_best", rec.final_best.to_string()}};
    out << result.dump() << '\n';
}

} // namespace mutsel
