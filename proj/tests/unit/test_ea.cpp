#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include <mutsel/analysis.hpp>
#include <mutsel/ea.hpp>

using namespace mutsel;

namespace {

EaConfig lo_config(std::size_t n, std::size_t lambda, std::uint64_t budget) {
    EaConfig c;
    c.n = n;
    c.lambda = lambda;
    c.eta = 1.5;
    c.chi = 1.0;
    c.budget_evaluations = budget;
    c.seed = 1;
    return c;
}

} // namespace

TEST(Mutate, ZeroRateLeavesStringUnchanged) {
    auto rng = derive_stream(1, 0);
    const auto x = random_bitstring(100, rng);
    auto y = x;
    mutate_in_place(y, 0.0, rng);
    EXPECT_EQ(y, x);
}

TEST(Mutate, UnitRateComplements) {
    auto rng = derive_stream(1, 1);
    const auto x = random_bitstring(100, rng);
    const auto y = mutate(x, MutationParams(100.0), rng);
    EXPECT_EQ(y.hamming_distance(x), 100U);
    auto c = x;
    c.complement();
    EXPECT_EQ(y, c);
}

TEST(Mutate, MeanHammingDistance) {
    auto rng = derive_stream(1, 2);
    const auto x = random_bitstring(100, rng);
    const MutationParams mp(1.0);
    double total = 0.0;
    for (int i = 0; i < 100000; ++i) {
        total += static_cast<double>(mutate(x, mp, rng).hamming_distance(x));
    }
    EXPECT_NEAR(total / 100000, 1.0, 0.03);
}

TEST(Mutate, PerPositionRateIsUniform) {
    auto rng = derive_stream(1, 3);
    constexpr std::size_t n = 70;
    constexpr int reps = 200000;
    std::vector<int> flips(n + 1, 0);
    for (int i = 0; i < reps; ++i) {
        auto x = Bitstring::zeros(n);
        mutate_in_place(x, 0.1, rng);
        for (std::size_t p = 1; p <= n; ++p) {
            flips[p] += x.bit(p) ? 1 : 0;
        }
    }
    const double se = std::sqrt(0.1 * 0.9 / reps);
    for (std::size_t p = 1; p <= n; ++p) {
        EXPECT_NEAR(flips[p] / static_cast<double>(reps), 0.1, 4.5 * se) << p;
    }
}

TEST(Potential, SpecValues) {
    const std::size_t n = 30;
    const std::size_t lambda = 10;
    const auto obj = Objective::leading_ones(n);

    auto [ones, f1] = sort_population(std::vector<Bitstring>(lambda, Bitstring::ones(n)), obj);
    EXPECT_EQ(compute_potential(ones, f1, 0.5, n), 5);

    auto [zeros, f0] = sort_population(std::vector<Bitstring>(lambda, Bitstring::zeros(n)), obj);
    EXPECT_EQ(compute_potential(zeros, f0, 0.5, n), static_cast<std::int64_t>(5 + lambda * n));
}

TEST(Potential, DropsByLambdaPerLeadingOne) {
    auto rng = derive_stream(2, 0);
    const std::size_t n = 40;
    const std::size_t lambda = 12;
    const auto obj = Objective::leading_ones(n);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<Bitstring> pop;
        for (std::size_t i = 0; i < lambda; ++i) {
            auto x = Bitstring::zeros(n);
            const std::size_t l = rng.uniform_int(n - 1);
            for (std::size_t p = 1; p <= l; ++p) {
                x.set(p, true);
            }
            pop.push_back(x);
        }
        auto [sp, sf] = sort_population(pop, obj);
        const double gamma = 0.5;
        const std::size_t pos = gamma_rank(gamma, lambda);
        const std::int64_t before = compute_potential(sp, sf, gamma, n);
        const std::size_t plus = static_cast<std::size_t>(
            std::count_if(sf.begin(), sf.end(), [&](Fitness f) { return f > sf[pos - 1]; }));
        // Raise the gamma-ranked string by one leading one; lambda+ is
        // unchanged as long as it does not overtake a strictly better string.
        auto raised = sp;
        const std::size_t l = raised[pos - 1].leading_ones();
        raised[pos - 1].set(l + 1, true);
        auto raised_fit = sf;
        raised_fit[pos - 1] = static_cast<Fitness>(raised[pos - 1].leading_ones());
        const std::size_t plus_after = static_cast<std::size_t>(std::count_if(
            raised_fit.begin(), raised_fit.end(), [&](Fitness f) { return f > raised_fit[pos - 1]; }));
        if (plus_after != plus || raised[pos - 1].leading_ones() != l + 1) {
            continue;
        }
        EXPECT_EQ(compute_potential(raised, raised_fit, gamma, n), before - static_cast<std::int64_t>(lambda));
    }
}

TEST(Run, BudgetExhaustedAccounting) {
    const auto c = lo_config(50, 50, 50 * 50);
    auto rng = derive_stream(c.seed, 0);
    const auto rec = run(c, Objective::leading_ones(50), {0.5}, 0, rng);
    EXPECT_EQ(rec.outcome, Outcome::BudgetExhausted);
    EXPECT_TRUE(rec.accounting_holds());
    EXPECT_EQ(rec.evaluations, c.lambda * rec.generations);
    EXPECT_EQ(rec.generations, 50U);
    EXPECT_EQ(rec.snapshots.size(), 50U);
}

TEST(Run, BudgetNotMultipleOfLambda) {
    auto c = lo_config(20, 7, 100);
    auto rng = derive_stream(3, 0);
    const auto rec = run(c, Objective::leading_ones(20), {0.5}, 1, rng);
    EXPECT_EQ(rec.evaluations, 98U);
    EXPECT_EQ(rec.generations, 14U);
    EXPECT_TRUE(rec.accounting_holds());
}

TEST(Run, OptimumInGenerationZero) {
    const SelPresParams p(0.5, 0.1, 1);
    const auto obj = Objective::selpres(40, p);
    auto c = lo_config(40, 10, 100000);
    auto opt = Bitstring::zeros(40);
    for (std::size_t i = 5; i <= 15; ++i) {
        opt.set(i, true);
    }
    RunOptions opts;
    opts.initial_population = std::vector<Bitstring>(10, Bitstring::ones(40));
    (*opts.initial_population)[6] = opt;
    auto rng = derive_stream(1, 0);
    const auto rec = run(c, obj, opts, rng);
    EXPECT_EQ(rec.outcome, Outcome::OptimumFound);
    EXPECT_LE(rec.evaluations, c.lambda);
    EXPECT_EQ(rec.evaluations, 7U);
    EXPECT_EQ(rec.generations, 1U);
    EXPECT_TRUE(rec.accounting_holds());
    EXPECT_TRUE(is_optimal(rec.final_best, p));
}

TEST(Run, OptimumFoundRecordsExactEvaluation) {
    // Small instance where the optimum is reachable quickly.
    const SelPresParams p(0.5, 0.1, 1);
    const auto obj = Objective::selpres(40, p);
    auto c = lo_config(40, 20, 2'000'000);
    c.eta = 1.82;
    c.chi = 1.2;
    for (std::uint64_t s = 0; s < 3; ++s) {
        auto rng = derive_stream(99, s);
        const auto rec = run(c, obj, {0.5}, 1000, rng);
        ASSERT_TRUE(rec.accounting_holds());
        if (rec.outcome == Outcome::OptimumFound) {
            EXPECT_TRUE(is_optimal(rec.final_best, p));
            EXPECT_EQ(rec.final_best.leading_ones(), 0U);
        } else {
            EXPECT_EQ(rec.evaluations, c.lambda * rec.generations);
        }
    }
}

TEST(Run, DeterministicForSameSeed) {
    const auto c = lo_config(60, 30, 30 * 200);
    const auto obj = Objective::selpres(60, SelPresParams(0.5, 0.05, 1));
    auto r1 = derive_stream(5, 5);
    auto r2 = derive_stream(5, 5);
    const auto a = run(c, obj, {0.25, 0.5, 0.75}, 1, r1);
    const auto b = run(c, obj, {0.25, 0.5, 0.75}, 1, r2);
    EXPECT_EQ(a, b);
    std::ostringstream sa;
    std::ostringstream sb;
    write_run_jsonl(a, sa);
    write_run_jsonl(b, sb);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Run, SnapshotInvariants) {
    const auto c = lo_config(80, 40, 40 * 300);
    auto rng = derive_stream(6, 0);
    const std::vector<double> gammas{0.25, 0.5, 0.75};
    const auto rec = run(c, Objective::leading_ones(80), gammas, 1, rng);
    ASSERT_FALSE(rec.snapshots.empty());
    for (const auto& s : rec.snapshots) {
        EXPECT_EQ(s.lambda_plus + s.lambda_zero + s.lambda_minus, c.lambda);
        EXPECT_DOUBLE_EQ(s.partition_gamma, 0.75);
        EXPECT_LT(static_cast<double>(s.lambda_plus), 0.75 * static_cast<double>(c.lambda));
        // Ranks are sorted best first, so the tracked levels are ordered.
        EXPECT_GE(*s.leading_ones_at(0.25), *s.leading_ones_at(0.5));
        EXPECT_GE(*s.leading_ones_at(0.5), *s.leading_ones_at(0.75));
        EXPECT_GE(s.best_fitness, static_cast<Fitness>(*s.leading_ones_at(0.25)));
        EXPECT_GE(s.fraction_1k3, 0.0);
        EXPECT_LE(s.fraction_1k3, 1.0);
        EXPECT_GE(s.potential_h, 0);
    }
}

TEST(Run, StrideThinsSnapshots) {
    const auto c = lo_config(30, 10, 10 * 95);
    auto rng = derive_stream(7, 0);
    const auto rec = run(c, Objective::leading_ones(30), {0.5}, 10, rng);
    EXPECT_EQ(rec.generations, 95U);
    EXPECT_EQ(rec.snapshots.size(), 10U);
    EXPECT_EQ(rec.snapshots.back().t, 90U);
    EXPECT_EQ(default_record_stride(500), 1U);
    EXPECT_EQ(default_record_stride(501), 10U);
}

TEST(Run, RejectsInvalidInputs) {
    auto rng = derive_stream(1, 0);
    auto c = lo_config(30, 10, 1000);
    EXPECT_THROW(run(c, Objective::leading_ones(31), {0.5}, 1, rng), DomainError);
    EXPECT_THROW(run(c, Objective::leading_ones(30), {1.5}, 1, rng), DomainError);
    c.eta = 1.0;
    EXPECT_THROW(run(c, Objective::leading_ones(30), {0.5}, 1, rng), ConfigError);
}

TEST(Run, JsonlLayout) {
    const auto c = lo_config(20, 5, 5 * 3);
    auto rng = derive_stream(8, 0);
    const auto rec = run(c, Objective::leading_ones(20), {0.5}, 1, rng);
    std::ostringstream os;
    write_run_jsonl(rec, os);
    std::istringstream is(os.str());
    std::string line;
    std::vector<nlohmann::json> lines;
    while (std::getline(is, line)) {
        lines.push_back(nlohmann::json::parse(line));
    }
    ASSERT_EQ(lines.size(), 1 + rec.snapshots.size() + 1);
    EXPECT_EQ(lines.front().at("type"), "header");
    EXPECT_EQ(lines.front().at("config").at("lambda"), 5);
    EXPECT_EQ(lines[1].at("type"), "snapshot");
    EXPECT_EQ(lines.back().at("type"), "result");
    EXPECT_EQ(lines.back().at("evaluations"), rec.evaluations);
}

// Theorem 2 example: median final-third L/n at gamma = 0.5.
TEST(Run, EquilibriumMedianAtHalf) {
    const auto c = lo_config(400, 400, 400ULL * 3000);
    std::vector<double> finals;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto rng = derive_stream(c.seed, s);
        const auto rec = run(c, Objective::leading_ones(400), {0.5}, 0, rng);
        ASSERT_TRUE(rec.accounting_holds());
        finals.push_back(static_cast<double>(*rec.snapshots.back().leading_ones_at(0.5)));
    }
    std::sort(finals.begin(), finals.end());
    const double median = 0.5 * (finals[9] + finals[10]);
    EXPECT_GE(median, 0.17 * 400);
    EXPECT_LE(median, 0.27 * 400);
}
