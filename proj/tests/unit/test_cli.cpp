#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path scratch = fs::temp_directory_path() / "mutsel_cli_test";

int run_cli(const std::string& args) {
    fs::create_directories(scratch);
    const std::string cmd = std::string(MUTSEL_CLI_PATH) + " " + args + " > " + (scratch / "stdout").string() +
                            " 2> " + (scratch / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Cli, SpectralPrintsJson) {
    ASSERT_EQ(run_cli("spectral --n 100 --eta 1.5 --chi 1 --kappa 4"), 0);
    const auto j = nlohmann::json::parse(slurp(scratch / "stdout"));
    EXPECT_EQ(j.at("d"), 2);
    EXPECT_LT(j.at("rho").get<double>(), j.at("frobenius_bound").get<double>());
}

TEST(Cli, RunWritesJsonLines) {
    const auto out = scratch / "trace.jsonl";
    ASSERT_EQ(run_cli("run --objective leading_ones --n 30 --lambda 10 --eta 1.5 --chi 1 --budget 100 --seed 3 --out " +
                      out.string()),
              0);
    std::ifstream in(out);
    std::string line;
    std::size_t lines = 0;
    std::string last;
    while (std::getline(in, line)) {
        ++lines;
        last = line;
    }
    EXPECT_EQ(lines, 1U + 10U + 1U);
    EXPECT_EQ(nlohmann::json::parse(last).at("evaluations"), 100);
}

TEST(Cli, InvalidConfigurationExitsWithOne) {
    EXPECT_EQ(run_cli("run --objective leading_ones --n 30 --lambda 10 --eta 1.0 --chi 1 --budget 100"), 1);
    EXPECT_NE(slurp(scratch / "stderr").find("η must satisfy 1 < η ≤ 2"), std::string::npos);
    EXPECT_EQ(run_cli("run --objective leading_ones --n 30 --lambda 10 --eta 1.5 --chi 60 --budget 100"), 1);
    EXPECT_NE(slurp(scratch / "stderr").find("χ/n must not exceed 1"), std::string::npos);
}

TEST(Cli, UsageErrorsExitWithOne) {
    EXPECT_EQ(run_cli("nonsense"), 1);
    EXPECT_EQ(run_cli("spectral --n notanumber"), 1);
    EXPECT_EQ(run_cli("sweep --config /nonexistent/file.json"), 1);
    const auto bad = scratch / "bad.json";
    std::ofstream(bad) << "{ not json";
    EXPECT_EQ(run_cli("sweep --config " + bad.string()), 1);
}

TEST(Cli, RuntimeFailureExitsWithTwo) {
    EXPECT_EQ(run_cli("branching --mode single --law poisson --rho 20 --trials 5 --max-t 30"), 2);
}

TEST(Cli, FlagsOverrideConfig) {
    const auto cfg = scratch / "sweep.json";
    std::ofstream(cfg) << R"({"chi_grid":[1.0],"eta_grid":[1.5],"n":40,"lambda":10,"budget_evaluations":1000,
                             "trials_per_point":5,"selpres":{"sigma":0.5,"delta":0.1,"k":1}})";
    ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --trials 2 --jobs 1"), 0);
    const auto csv = slurp(scratch / "stdout");
    EXPECT_EQ(csv.rfind("# mutsel-lab v1\n", 0), 0U);
    EXPECT_NE(csv.find("\n1,1.5,0,2,censored,"), std::string::npos) << csv;
}
