#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "lcoco/io.hpp"

namespace fs = std::filesystem;

namespace lcoco {
namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lcoco_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const std::string& name, const std::string& body) {
    const auto p = dir_ / name;
    std::ofstream(p) << body;
    return p.string();
  }

  int run(const std::string& args) {
    const std::string cmd = std::string(LCOCO_CLI_PATH) + " " + args + " > " + (dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  Json summary(const std::string& out) { return Json::parse(read_file((dir_ / out / "summary.json").string())); }

  fs::path dir_;
};

TEST_F(CliTest, StaticSequenceHasZeroPathLengthAndPasses) {
  const auto cfg = write_config("c.json", R"({"horizon": 100, "seed": 4})");
  EXPECT_EQ(run("run --config " + cfg + " --out " + (dir_ / "o").string()), 0);
  const Json s = summary("o");
  const Json& r = s["runs"][0];
  EXPECT_EQ(r["metrics"]["V"].get<double>(), 0.0);
  const double c = r["contraction"]["c"].get<double>();
  const double bound = r["constants"]["lip_f"].get<double>() * r["constants"]["D"].get<double>() / (1.0 - c);
  EXPECT_LE(r["metrics"]["R_d"].get<double>(), bound);
  EXPECT_TRUE(s["all_checks_pass"].get<bool>());
}

TEST_F(CliTest, InconsistentModuliExitTwo) {
  const auto cfg = write_config("c.json", R"({"eig_f": [3.0, 1.0]})");
  EXPECT_EQ(run("run --config " + cfg + " --out " + (dir_ / "o").string()), 2);
}

TEST_F(CliTest, UnknownKeyAndMissingFileExitTwo) {
  const auto cfg = write_config("c.json", R"({"horizon": 10, "colour": "blue"})");
  EXPECT_EQ(run("run --config " + cfg), 2);
  EXPECT_EQ(run("run --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run("run"), 2);
}

TEST_F(CliTest, UnwritableOutputExitTwo) {
  const auto cfg = write_config("c.json", R"({"horizon": 5})");
  std::ofstream(dir_ / "file") << "x";
  EXPECT_EQ(run("run --config " + cfg + " --out " + (dir_ / "file" / "sub").string()), 2);
}

TEST_F(CliTest, ReplicationsWriteOneCsvEachAndRerunsAreByteIdentical) {
  const auto cfg = write_config("c.json", R"({"horizon": 40, "drift_f": 0.05, "replications": 2, "start": "infeasible"})");
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "b").string() + " --jobs 2"), 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    ++files;
    const auto name = e.path().filename().string();
    if (name == "summary.json") continue;
    EXPECT_EQ(read_file(e.path().string()), read_file((dir_ / "b" / name).string())) << name;
  }
  EXPECT_EQ(files, 3);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "run_0.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "run_1.csv"));
}

TEST_F(CliTest, SeedOverrideChangesSequence) {
  const auto cfg = write_config("c.json", R"({"horizon": 10, "drift_f": 0.05})");
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "b").string() + " --seed 99"), 0);
  EXPECT_NE(summary("a")["runs"][0]["sequence_digest"], summary("b")["runs"][0]["sequence_digest"]);
}

TEST_F(CliTest, DistSweepProducesTwoBlocksWithSmallerWindowSlower) {
  const auto cfg = write_config("c.json", R"({"horizon": 30, "sweep": {"dist": [0.05, 0.5]}})");
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "o").string()), 0);
  const Json s = summary("o");
  ASSERT_EQ(s["runs"].size(), 2u);
  const Json& small = s["runs"][0]["contraction"];
  const Json& large = s["runs"][1]["contraction"];
  for (const char* key : {"c2", "c3", "c4", "c5", "c"}) EXPECT_TRUE(small.contains(key)) << key;
  EXPECT_GT(small["c5"].get<double>(), large["c5"].get<double>());
  EXPECT_EQ(s["runs"][0]["sweep_point"]["dist"].get<double>(), 0.05);
  EXPECT_EQ(s["config"]["horizon"].get<int>(), 30);
  EXPECT_EQ(s["runs"][0]["sequence_digest"].get<std::string>().size(), 40u);
}

TEST_F(CliTest, FailedBoundCheckExitOne) {
  const auto cfg = write_config("c.json", R"({"horizon": 20, "tolerances": {"ratio": -1.0}})");
  EXPECT_EQ(run("run --config " + cfg + " --out " + (dir_ / "o").string()), 1);
  EXPECT_FALSE(summary("o")["all_checks_pass"].get<bool>());
}

TEST_F(CliTest, GeneratedSequenceReplaysThroughProblemFile) {
  const auto cfg = write_config("c.json", R"({"horizon": 15, "drift_f": 0.1, "seed": 8})");
  ASSERT_EQ(run("generate --config " + cfg + " --out " + (dir_ / "seq.json").string()), 0);
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "a").string()), 0);
  const auto cfg2 = write_config("c2.json", R"({"problem_file": "seq.json"})");
  ASSERT_EQ(run("run --config " + cfg2 + " --out " + (dir_ / "b").string()), 0);
  EXPECT_EQ(read_file((dir_ / "a" / "run_0.csv").string()), read_file((dir_ / "b" / "run_0.csv").string()));
}

TEST_F(CliTest, EmptyFeasibleSetExitThree) {
  const std::string seq = R"({"dim": 2, "dist": 0.2, "alpha": 0.5,
    "ambient": {"center": [0, 0], "radius": 1},
    "rounds": [{"f": {"H": [[1, 0], [0, 1]], "center": [0, 0], "offset": 0},
                "g": {"H": [[1, 0], [0, 1]], "center": [10, 0], "offset": -0.5}}]})";
  write_config("seq.json", seq);
  const auto cfg = write_config("c.json", R"({"problem_file": "seq.json"})");
  EXPECT_EQ(run("run --config " + cfg + " --out " + (dir_ / "o").string()), 3);
}

TEST_F(CliTest, ForcedOptimalModeHasZeroRegret) {
  const auto cfg = write_config("c.json", R"({"horizon": 20, "drift_f": 0.2, "forced_optimal": true})");
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "o").string()), 0);
  const Json s = summary("o");
  const Json& m = s["runs"][0]["metrics"];
  EXPECT_EQ(m["R_d"].get<double>(), 0.0);
  EXPECT_EQ(m["P_g"].get<double>(), 0.0);
}

}  // namespace
}  // namespace lcoco
