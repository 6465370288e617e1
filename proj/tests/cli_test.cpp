// Drives the mblend executable end to end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mblend_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Runs the CLI with stdout/stderr redirected to files; returns the exit code.
  int run(const std::string& args, const std::string& out = "stdout.txt", const std::string& err = "stderr.txt") {
    const std::string cmd =
        std::string(MBLEND_CLI_PATH) + " " + args + " > " + path(out) + " 2> " + path(err);
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

const char* kCandidates =
    "{\"id\": \"A\", \"content_type\": 0, \"score\": 0.5}\n"
    "{\"id\": \"B\", \"content_type\": 0, \"score\": 0.9}\n"
    "{\"id\": \"C\", \"content_type\": 1, \"score\": 0.7}\n";

TEST_F(Cli, BlendSortIsSorted) {
  write("c.jsonl", kCandidates);
  ASSERT_EQ(run("blend --candidates " + path("c.jsonl") + " --policy sort --k 3"), 0);
  const auto slate = json::parse(read("stdout.txt"));
  ASSERT_EQ(slate.size(), 3u);
  EXPECT_EQ(slate[0]["id"], "B");
  EXPECT_EQ(slate[1]["id"], "C");
  EXPECT_EQ(slate[2]["id"], "A");
  EXPECT_TRUE(slate[0]["sampled_type"].is_null());
  EXPECT_EQ(slate[2]["position"], 3);
}

TEST_F(Cli, BlendSingleTypeMatchesSort) {
  write("c.jsonl",
        "{\"id\": \"x\", \"content_type\": 0, \"score\": 0.1}\n{\"id\": \"y\", \"content_type\": 0, \"score\": 0.3}\n");
  ASSERT_EQ(run("blend --candidates " + path("c.jsonl") + " --policy mb --probs 1.0 --k 5 --seed 1"), 0);
  const auto slate = json::parse(read("stdout.txt"));
  ASSERT_EQ(slate.size(), 2u);
  EXPECT_EQ(slate[0]["id"], "y");
  EXPECT_EQ(slate[1]["id"], "x");
}

TEST_F(Cli, SeededBlendIsByteIdentical) {
  write("c.jsonl", kCandidates);
  const std::string args = "blend --candidates " + path("c.jsonl") + " --probs 0.5,0.5 --k 3 --seed 42 --out ";
  ASSERT_EQ(run(args + path("a.json")), 0);
  ASSERT_EQ(run(args + path("b.json")), 0);
  EXPECT_EQ(read("a.json"), read("b.json"));
  EXPECT_FALSE(read("a.json").empty());
}

TEST_F(Cli, MissingSeedIsReported) {
  write("c.jsonl", kCandidates);
  ASSERT_EQ(run("blend --candidates " + path("c.jsonl") + " --probs 0.5,0.5 --k 3"), 0);
  EXPECT_NE(read("stderr.txt").find("seed: "), std::string::npos);
}

TEST_F(Cli, ParseErrorExitsOneWithLineNumber) {
  write("c.jsonl", std::string(kCandidates) + "{\"id\": \"D\", \"content_type\": 0}\n");
  EXPECT_EQ(run("blend --candidates " + path("c.jsonl") + " --policy sort --k 3"), 1);
  EXPECT_NE(read("stderr.txt").find("line 4"), std::string::npos);
  EXPECT_EQ(run("blend --candidates " + path("missing.jsonl") + " --policy sort"), 1);
}

TEST_F(Cli, InvalidConfigExitsTwo) {
  write("c.jsonl", kCandidates);
  EXPECT_EQ(run("blend --candidates " + path("c.jsonl") + " --probs 0.5,0.4 --k 3 --seed 1"), 2);
  EXPECT_EQ(run("blend --candidates " + path("c.jsonl") + " --policy mmr --lambda 3 --k 3"), 2);
  EXPECT_EQ(run("propensity --probs 0.5,0.5 --pool-sizes 3"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, BlendFromConfigFileAtLeast) {
  write("c.jsonl", kCandidates);
  write("cfg.json", R"({"probs": [0.5, 0.5], "variant": "at_least", "slow_type": 1})");
  ASSERT_EQ(run("blend --candidates " + path("c.jsonl") + " --config " + path("cfg.json") + " --k 3 --seed 3"), 0);
  // Baseline [B, C, A] already has 1/3 of type 1 < 0.5, so blending ran.
  const auto slate = json::parse(read("stdout.txt"));
  EXPECT_FALSE(slate[0]["sampled_type"].is_null());
}

TEST_F(Cli, PropensityOneHot) {
  ASSERT_EQ(run("propensity --probs 0,1 --k 3 --pool-sizes 3,3 --csv " + path("p.csv")), 0);
  const auto out = json::parse(read("stdout.txt"));
  EXPECT_TRUE(out["exact"].get<bool>());
  const auto& m = out["matrix"];
  ASSERT_EQ(m.size(), 6u);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double expected = (r >= 3 && r - 3 == j) ? 1.0 : 0.0;
      EXPECT_EQ(m[r][j].get<double>(), expected);
    }
  }
  EXPECT_EQ(read("p.csv").substr(0, 13), "type,m,p1,p2,");
}

TEST_F(Cli, PropensityMonteCarloAndExhaustionWarning) {
  ASSERT_EQ(run("propensity --probs 0.7,0.3 --k 3 --pool-sizes 1,5 --mc-samples 1000 --seed 4 --threads 2"), 0);
  const auto out = json::parse(read("stdout.txt"));
  EXPECT_FALSE(out["exact"].get<bool>());
  EXPECT_EQ(out["monte_carlo"]["samples"], 1000);
  EXPECT_NE(read("stderr.txt").find("warning"), std::string::npos);
}

TEST_F(Cli, SimulateZeroClicks) {
  write("sim.json", R"({"users": 1, "slates_per_user": 1, "base_click": [0, 0], "seed": 5,
                        "policies": [{"policy": "sort"}, {"policy": "mb", "probs": [0.5, 0.5]}]})");
  ASSERT_EQ(run("simulate --config " + path("sim.json") + " --out " + path("r.json") + " --table -"), 0);
  const auto report = json::parse(read("r.json"));
  for (const auto& p : report["policies"]) EXPECT_EQ(p["total_engagement"].get<double>(), 0.0);
  EXPECT_NE(read("stdout.txt").find("Policy"), std::string::npos);
}

TEST_F(Cli, SimulateThenEvaluateOnPolicy) {
  write("sim.json", R"({"users": 50, "slates_per_user": 2, "seed": 11,
                        "policies": [{"policy": "mb", "probs": [0.6, 0.4]}]})");
  ASSERT_EQ(run("simulate --config " + path("sim.json") + " --logs " + path("logs.jsonl") + " --sweep 0.5,1"), 0);
  const auto report = json::parse(read("stdout.txt"));
  EXPECT_EQ(report["sweep"].size(), 2u);

  ASSERT_EQ(run("evaluate --logs " + path("logs.jsonl") + " --target-probs 0.6,0.4 --k 10"), 0);
  const auto est = json::parse(read("stdout.txt"));
  std::ifstream logs(path("logs.jsonl"));
  double sum = 0.0;
  std::size_t n = 0;
  for (std::string line; std::getline(logs, line); ++n) sum += json::parse(line)["reward"].get<double>();
  EXPECT_EQ(n, 1000u);
  EXPECT_EQ(est["value"].get<double>(), sum / static_cast<double>(n));
}

TEST_F(Cli, EvaluateSupportViolationExitsThree) {
  write("logs.jsonl",
        "{\"pool_sizes\": [5, 5], \"type\": 0, \"m\": 1, \"j\": 1, \"reward\": 1, \"logging_propensity\": 0}\n");
  EXPECT_EQ(run("evaluate --logs " + path("logs.jsonl") + " --target-probs 0.5,0.5 --k 5"), 3);
  EXPECT_NE(read("stderr.txt").find("row 0"), std::string::npos);
}

TEST_F(Cli, BlendOutputFeedsExposure) {
  write("c.jsonl", kCandidates);
  ASSERT_EQ(run("blend --candidates " + path("c.jsonl") + " --policy sort --k 3 --out " + path("s.json")), 0);
  ASSERT_EQ(run("exposure --slate " + path("s.json") + " --num-types 2"), 0);
  const auto e = json::parse(read("stdout.txt"));
  EXPECT_DOUBLE_EQ(e[0].get<double>(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(e[1].get<double>(), 1.0 / 3.0);
}

TEST_F(Cli, HelpSucceeds) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("simulate --help"), 0);
  EXPECT_NE(read("stdout.txt").find("--threads"), std::string::npos);
}

}  // namespace
