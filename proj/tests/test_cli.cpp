#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mailab/io.hpp"

namespace fs = std::filesystem;
using mailab::Json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mailab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(MAILAB_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  Json json(const std::string& name) const { return mailab::read_json_file(dir_ / name); }

  void gen_fig1(int H) const {
    ASSERT_EQ(run("gen --name fig1 --horizon " + std::to_string(H) + " --out " + dir_.string()), 0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("--no-such-flag"), 2);
  EXPECT_EQ(run("gen --name nope --out " + dir_.string()), 2);
  EXPECT_EQ(run("verify --suite nope"), 2);
  EXPECT_EQ(run("eval --game " + path("missing.json") + " --expert x --policy y"), 2);
}

TEST_F(Cli, GenFig1WritesFixtureFiles) {
  gen_fig1(8);
  for (const char* f : {"game.json", "expert.json", "learner.json", "deviations.json", "expected.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  EXPECT_DOUBLE_EQ(json("expected.json").at("expected").at("regret_gap").get<double>(), 6.0);
  EXPECT_EQ(json("game.json").at("states").size(), 15u);
}

TEST_F(Cli, GenMultiCeWritesBothGames) {
  ASSERT_EQ(run("gen --name multi-ce-nfg --out " + dir_.string()), 0);
  for (const char* f : {"game_r.json", "game_rprime.json", "sigma1.json", "sigma2.json", "expected.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
}

TEST_F(Cli, EvalFig1ReportsRegretGap) {
  gen_fig1(8);
  ASSERT_EQ(run("eval --game " + path("game.json") + " --expert " + path("expert.json") + " --policy " +
                path("learner.json") + " --out " + dir_.string()),
            0);
  EXPECT_NEAR(json("report.json").at("regret_gap").get<double>(), 6.0, 1e-9);
  EXPECT_TRUE(fs::exists(dir_ / "report.csv"));

  ASSERT_EQ(run("eval --game " + path("game.json") + " --expert " + path("expert.json") + " --policy " +
                path("expert.json") + " --out " + dir_.string()),
            0);
  EXPECT_EQ(json("report.json").at("regret_gap").get<double>(), 0.0);
}

TEST_F(Cli, EvalIdentityOnlyClassHasZeroRegret) {
  gen_fig1(5);
  std::ofstream(path("identity.json")) << R"({"deviations": [], "complete": []})";
  ASSERT_EQ(run("eval --game " + path("game.json") + " --expert " + path("expert.json") + " --policy " +
                path("learner.json") + " --deviations file --deviation-file " + path("identity.json") + " --out " +
                dir_.string()),
            0);
  EXPECT_EQ(json("report.json").at("regret").get<double>(), 0.0);
}

TEST_F(Cli, EvalRequireCoverageExitsThree) {
  gen_fig1(5);
  EXPECT_EQ(run("eval --game " + path("game.json") + " --expert " + path("expert.json") + " --policy " +
                path("learner.json") + " --require-coverage --out " + dir_.string()),
            3);
}

TEST_F(Cli, MaliceOnUncoveredFig1ExitsThree) {
  gen_fig1(5);
  EXPECT_EQ(run("train --algo malice --game " + path("game.json") + " --expert " + path("expert.json") +
                " --exact --rounds 10 --out " + dir_.string()),
            3);
}

TEST_F(Cli, BladesWithProjectedSubgradientRecoversFig1) {
  gen_fig1(6);
  ASSERT_EQ(run("train --algo blades --game " + path("game.json") + " --expert " + path("expert.json") +
                " --rule pgd --rounds 200 --out " + dir_.string()),
            0);
  const auto s = json("summary.json");
  EXPECT_LE(s.at("regret_gap").get<double>(), 1e-6);
  EXPECT_GT(s.at("queries").get<std::size_t>(), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "policy.json"));
  EXPECT_TRUE(fs::exists(dir_ / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "oracle_log.jsonl"));
}

TEST_F(Cli, ExactJbcHasZeroLoss) {
  gen_fig1(5);
  ASSERT_EQ(run("train --algo jbc --exact --game " + path("game.json") + " --expert " + path("expert.json") +
                " --out " + dir_.string()),
            0);
  EXPECT_EQ(json("summary.json").at("final_loss").get<double>(), 0.0);
}

TEST_F(Cli, VerifyNfgPasses) {
  EXPECT_EQ(run("verify --suite nfg --out " + dir_.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "report.csv"));
}

TEST_F(Cli, SweepConfigErrorsExitTwo) {
  std::ofstream(path("empty.json")) << R"({"grid": {}})";
  EXPECT_EQ(run("sweep --config " + path("empty.json")), 2);
}

TEST_F(Cli, SweepWritesReportAndSummary) {
  std::ofstream(path("cfg.json")) << R"({"fixture": "fig1", "grid": {"H": [4, 8]}})";
  ASSERT_EQ(run("sweep --config " + path("cfg.json") + " --out " + path("sw")), 0);
  const auto s = mailab::read_json_file(dir_ / "sw" / "summary.json");
  EXPECT_EQ(s.at("failed"), 0u);
  EXPECT_NEAR(s.at("regret_gap_slope").at("slope").get<double>(), 1.0, 1e-9);
}
