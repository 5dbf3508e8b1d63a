#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "support.hpp"

namespace sizer {
namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sizer");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::cli_main(static_cast<int>(argv.size()), argv.data());
}

TEST(Cli, HelpExitsZero) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"--help"}), 0);
  const auto out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("compare"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsUsageError) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({}), 1);
  ::testing::internal::GetCapturedStderr();
}

TEST(Cli, BadConfigExitsOneNamingTheField) {
  testing::ScratchDir dir("cli-bad");
  testing::write_file(dir / "c.json", R"({"problem": "synthetic", "modes": ["SGA"], "ga": {"population": "x"}})");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"--config", (dir / "c.json").string(), "compare"}), 1);
  const auto err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("ga.population"), std::string::npos) << err;
}

TEST(Cli, RuntimeFailureExitsTwo) {
  testing::ScratchDir dir("cli-runtime");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"report", "--traces", (dir / "missing").string()}), 2);
  ::testing::internal::GetCapturedStderr();
}

TEST(Cli, SampleOptimizeAndReport) {
  testing::ScratchDir dir("cli-flow");
  testing::write_file(dir / "c.json",
                      R"({"problem": "synthetic", "modes": ["MGA"], "runs": 2,
                          "ga": {"population": 6, "gen_max": 5}, "output": "out"})");
  const auto cfg = (dir / "c.json").string();
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"--config", cfg, "sample", "--n", "25"}), 0);
  EXPECT_EQ(run_cli({"--config", cfg, "--seed", "3", "optimize", "--run", "1"}), 0);
  EXPECT_EQ(run_cli({"--config", cfg, "optimize", "--mode", "SGA"}), 0);
  EXPECT_EQ(run_cli({"--config", cfg, "report", "--points", "11"}), 0);
  ::testing::internal::GetCapturedStdout();
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "dataset.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "traces" / "MGA_1.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "SGA_0.json"));
  const auto conv = testing::read_file(dir / "out" / "convergence.csv");
  EXPECT_EQ(conv.substr(0, conv.find('\n')), "calls,MGA,SGA");
}

TEST(Cli, UnknownModeIsUsageError) {
  testing::ScratchDir dir("cli-mode");
  testing::write_file(dir / "c.json", R"({"problem": "synthetic", "modes": ["MGA"]})");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"--config", (dir / "c.json").string(), "optimize", "--mode", "GA"}), 1);
  ::testing::internal::GetCapturedStderr();
}

TEST(Cli, NonPositiveWorkersRejected) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"--workers", "0", "compare"}), 1);
  ::testing::internal::GetCapturedStderr();
}

}  // namespace
}  // namespace sizer
