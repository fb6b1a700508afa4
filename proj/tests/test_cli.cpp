#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace dirlab {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigs = DIRLAB_CONFIG_DIR;

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dirlab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("dirlab_test_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string config(const std::string& name) { return (kConfigs / name).string(); }

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run_cli({}), 1);
    EXPECT_EQ(run_cli({"bogus"}), 1);
    EXPECT_EQ(run_cli({"price"}), 1);
    EXPECT_EQ(run_cli({"price", "--config", "/nonexistent.json"}), 1);
}

TEST(Cli, MalformedConfigNamesTheField) {
    const auto dir = scratch("bad");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "bad.json");
        f << R"({"model": {"type": "poisson", "r0": 0.05, "delta": "x", "lambda": 0.5}, "times": {"T": 1}})";
    }
    ::testing::internal::CaptureStderr();
    EXPECT_EQ(run_cli({"--out", dir.string(), "price", "--config", (dir / "bad.json").string()}), 1);
    const auto err = ::testing::internal::GetCapturedStderr();
    EXPECT_NE(err.find("model.delta"), std::string::npos) << err;
}

TEST(Cli, PriceWritesCsvAndSummary) {
    const auto dir = scratch("price");
    ASSERT_EQ(run_cli({"--out", dir.string(), "price", "--config", config("poisson.json")}), 0);
    const auto s = summary(dir);
    // priced from the initial state at times.t = 5
    EXPECT_DOUBLE_EQ(s["closed_form"].get<double>(), price_closed_form(ModelSpec::poisson(0.05, 0.1, 0.5), {0.05, 0}, 5.0, 10.0));
    EXPECT_TRUE(s["mc_within_3se"].get<bool>());
    EXPECT_TRUE(fs::exists(dir / "price.csv"));
}

TEST(Cli, LongRateSpectralAndExtrapolatedAgree) {
    const auto dir = scratch("long_rate");
    ASSERT_EQ(run_cli({"--out", dir.string(), "long-rate", "--config", config("markov2.json")}), 0);
    const auto s = summary(dir);
    ASSERT_EQ(s["estimates"].size(), 2u);
    EXPECT_EQ(s["estimates"][1]["method"], "spectral");
    EXPECT_NEAR(s["estimates"][1]["x_L"].get<double>(), 21.0 / 22.0, 1e-14);
    EXPECT_LE(s["spectral_gap"].get<double>(), 1e-6);
}

TEST(Cli, LemmaLabFinalRowMatchesTheFiniteSum) {
    const auto dir = scratch("lemma");
    ASSERT_EQ(run_cli({"--out", dir.string(), "lemma-lab", "--config", config("four_atoms.json")}), 0);
    std::istringstream csv(slurp(dir / "lemma_trace.csv"));
    std::string line, last;
    while (std::getline(csv, line)) {
        if (!line.empty()) last = line;
    }
    // n,atom,norm,limit,verdict
    std::istringstream row(last);
    std::string n, atom, norm;
    std::getline(row, n, ',');
    std::getline(row, atom, ',');
    std::getline(row, norm, ',');
    EXPECT_EQ(n, "50");
    EXPECT_NEAR(std::stod(norm), 3.8906198337159748, 1e-4);
}

TEST(Cli, VerifyCommandsPass) {
    for (const auto& [cmd, cfg] : std::vector<std::pair<std::string, std::string>>{
             {"verify-measure", "measure_markov.json"},
             {"verify-dir", "markov2.json"},
             {"verify-dir", "constant.json"},
             {"lemma-lab", "four_atoms_deep.json"}}) {
        const auto dir = scratch("verify");
        EXPECT_EQ(run_cli({"--out", dir.string(), "--threads", "2", cmd, "--config", config(cfg)}), 0) << cmd << " " << cfg;
        EXPECT_EQ(summary(dir)["verdict"], "pass");
    }
}

TEST(Cli, FailedVerificationExitsTwo) {
    const auto dir = scratch("fail");
    // plain tail cannot reach 1e-9 on the jump model: the harness aborts
    EXPECT_EQ(run_cli({"--out", dir.string(), "verify-dir", "--config", config("poisson.json"), "--method",
                       "plain_tail", "--tol", "1e-9"}),
              2);
    EXPECT_EQ(summary(dir)["verdict"], "aborted");
    // for n <= 50 the norms sit more than 0.1 below the ess-sup
    EXPECT_EQ(run_cli({"--out", dir.string(), "lemma-lab", "--config", config("four_atoms.json"), "--tol", "1e-3"}), 2);
}

TEST(Cli, OutputsIgnoreThreadCount) {
    const auto a = scratch("threads_a");
    const auto b = scratch("threads_b");
    ASSERT_EQ(run_cli({"--out", a.string(), "--threads", "1", "verify-dir", "--config", config("poisson.json")}), 0);
    ASSERT_EQ(run_cli({"--out", b.string(), "--threads", "3", "verify-dir", "--config", config("poisson.json")}), 0);
    for (const char* f : {"report.csv", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, SeedFlagOverridesConfig) {
    const auto a = scratch("seed_a");
    const auto b = scratch("seed_b");
    ASSERT_EQ(run_cli({"--out", a.string(), "--seed", "1", "simulate", "--config", config("poisson.json")}), 0);
    ASSERT_EQ(run_cli({"--out", b.string(), "--seed", "2", "simulate", "--config", config("poisson.json")}), 0);
    EXPECT_NE(slurp(a / "scenarios.csv"), slurp(b / "scenarios.csv"));
    EXPECT_EQ(summary(a)["seed"], 1);
}

}  // namespace
}  // namespace dirlab
