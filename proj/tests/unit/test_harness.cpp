#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "sizer/config.hpp"
#include "sizer/harness.hpp"
#include "sizer/problems.hpp"
#include "sizer/trace_io.hpp"
#include "support.hpp"

namespace sizer {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string config_error_path(const json& j) {
  try {
    parse_config(j, "/tmp");
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(Config, ErrorsCarryFieldPaths) {
  const json base = {{"problem", "synthetic"}, {"modes", {"SGA"}}};
  EXPECT_EQ(config_error_path(base), "<no error>");

  json j = base;
  j["ga"] = {{"population", "ten"}};
  EXPECT_EQ(config_error_path(j), "ga.population");
  j = base;
  j["ga"] = {{"popsize", 10}};
  EXPECT_EQ(config_error_path(j), "ga.popsize");
  j = base;
  j["ga"] = {{"population", 1}};
  EXPECT_EQ(config_error_path(j), "ga.population");
  j = base;
  j["ga"] = {{"surrogate_retry_budget", 0}};
  EXPECT_EQ(config_error_path(j), "ga.surrogate_retry_budget");
  j = base;
  j["runs"] = 0;
  EXPECT_EQ(config_error_path(j), "runs");
  j = base;
  j["modes"] = {"SGA", "SGA"};
  EXPECT_EQ(config_error_path(j), "modes");
  j = base;
  j["database"] = {{"train_fraction", 1.5}};
  EXPECT_EQ(config_error_path(j), "database.train_fraction");
  j = base;
  j.erase("problem");
  EXPECT_EQ(config_error_path(j), "problem");
  j = base;
  j["problem"] = "opamp";
  EXPECT_EQ(config_error_path(j), "problem");
  j = base;
  j["evaluator"] = {{"kind", "spice"}};
  EXPECT_EQ(config_error_path(j), "evaluator.kind");
  j = base;
  j["tuning"] = 1;
  EXPECT_EQ(config_error_path(j), "tuning");
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  testing::ScratchDir dir("config");
  testing::write_file(dir / "exp.json",
                      R"({"problem": "tsmcoa", "modes": ["MGA_MLSP"], "output": "o",
                          "bundle": {"path": "b"}, "database": {"n": 50}})");
  const auto cfg = load_config(dir / "exp.json");
  EXPECT_EQ(cfg.output, dir.path() / "o");
  EXPECT_EQ(cfg.bundle_path, dir.path() / "b");
  EXPECT_TRUE(cfg.needs_models());
  EXPECT_EQ(cfg.database_n, 50u);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"synthetic.json", "tsmcoa.json"}) {
    EXPECT_NO_THROW(load_config(fs::path(SIZER_SOURCE_DIR) / "configs" / name)) << name;
  }
  const auto cfg = load_config(fs::path(SIZER_SOURCE_DIR) / "configs" / "tsmcoa.json");
  EXPECT_EQ(cfg.modes.size(), 4u);
  EXPECT_TRUE(cfg.training.log_features);
  EXPECT_TRUE(cfg.paired_seeds);
}

TEST(RunSeed, PairingSharesSeedsAcrossModes) {
  EXPECT_EQ(run_seed(1, GateMode::SGA, 3, true), run_seed(1, GateMode::MGA_MLSCP, 3, true));
  EXPECT_NE(run_seed(1, GateMode::SGA, 3, false), run_seed(1, GateMode::MGA, 3, false));
  EXPECT_NE(run_seed(1, GateMode::SGA, 3, true), run_seed(1, GateMode::SGA, 4, true));
  EXPECT_NE(run_seed(1, GateMode::SGA, 3, true), run_seed(2, GateMode::SGA, 3, true));
}

RunTrace fake_trace(double best, std::uint64_t calls) {
  RunTrace t;
  GenerationRecord g0;
  g0.cum_calls = calls / 2;
  GenerationRecord g1;
  g1.generation = 1;
  g1.best_fitness = best;
  g1.cum_calls = calls;
  t.generations = {g0, g1};
  return t;
}

TEST(Summary, HandComputedStatistics) {
  const auto s = summarize(GateMode::MGA, {fake_trace(2.0, 100), fake_trace(4.0, 300),
                                          fake_trace(kInf, 50), fake_trace(6.0, 200)});
  EXPECT_EQ(s.runs, 4u);
  EXPECT_EQ(s.feasible_runs, 3u);
  EXPECT_EQ(s.best, 2.0);
  EXPECT_EQ(s.worst, 6.0);
  EXPECT_EQ(s.mean, 4.0);
  EXPECT_DOUBLE_EQ(s.sd, 2.0);  // sqrt((4 + 0 + 4) / 2)
  EXPECT_EQ(s.mean_calls, 162.5);
  EXPECT_EQ(s.median_calls, 150.0);
  EXPECT_TRUE(std::isinf(s.fitness[2]));

  const auto one = summarize(GateMode::SGA, {fake_trace(1.0, 10)});
  EXPECT_EQ(one.sd, 0.0);
  const auto none = summarize(GateMode::SGA, {fake_trace(kInf, 10)});
  EXPECT_TRUE(std::isnan(none.mean));
}

TEST(Summary, ReductionsFromMeansAndMedians) {
  SummaryTable t;
  t.rows = {summarize(GateMode::MGA, {fake_trace(1, 100), fake_trace(1, 300)}),
            summarize(GateMode::MGA_MLSCP, {fake_trace(1, 10), fake_trace(1, 50), fake_trace(1, 30)})};
  EXPECT_DOUBLE_EQ(*t.reduction(GateMode::MGA, GateMode::MGA_MLSCP), 0.85);
  EXPECT_DOUBLE_EQ(*t.reduction(GateMode::MGA, GateMode::MGA_MLSCP, true), 0.85);
  EXPECT_FALSE(t.reduction(GateMode::SGA, GateMode::MGA).has_value());
  const auto j = t.to_json();
  EXPECT_EQ(j.at("modes").size(), 2u);
  EXPECT_NE(t.to_csv().find("MGA_MLSCP"), std::string::npos);
}

TEST(Convergence, SingleTracePassesThrough) {
  LabeledTrace a{"MGA", fake_trace(3.0, 80).generations};
  const auto t = report_convergence({a});
  EXPECT_EQ(t.calls, (std::vector<double>{40, 80}));
  ASSERT_EQ(t.values.size(), 1u);
  EXPECT_TRUE(std::isinf(t.values[0][0]));
  EXPECT_EQ(t.values[0][1], 3.0);
}

TEST(Convergence, SeveralTracesShareAGrid) {
  LabeledTrace a{"A", fake_trace(3.0, 80).generations};   // records at 40 (inf), 80 (3)
  LabeledTrace b{"B", fake_trace(1.0, 200).generations};  // records at 100 (inf), 200 (1)
  const auto t = report_convergence({a, b}, 5);
  EXPECT_EQ(t.calls, (std::vector<double>{0, 50, 100, 150, 200}));
  EXPECT_EQ(t.labels, (std::vector<std::string>{"A", "B"}));
  EXPECT_TRUE(std::isinf(t.values[0][1]));
  EXPECT_EQ(t.values[0][2], 3.0);
  EXPECT_EQ(t.values[0][4], 3.0);  // held after the trace ends
  EXPECT_TRUE(std::isinf(t.values[1][3]));
  EXPECT_EQ(t.values[1][4], 1.0);
  EXPECT_THROW(report_convergence({}), std::invalid_argument);
}

TEST(Convergence, AverageGroupsByLabel) {
  LabeledTrace a1{"A", fake_trace(2.0, 100).generations};
  LabeledTrace a2{"A", fake_trace(4.0, 100).generations};
  LabeledTrace b{"B", fake_trace(5.0, 100).generations};
  const auto t = average_convergence({a1, b, a2}, 3);
  ASSERT_EQ(t.labels, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(t.values[0][2], 3.0);
  EXPECT_EQ(t.values[1][2], 5.0);
  EXPECT_THROW(average_convergence({}), std::invalid_argument);
}

TEST(TraceIo, RoundTrip) {
  testing::ScratchDir dir("trace");
  auto t = fake_trace(1.5, 42);
  t.generations[1].cum_rejects.classifier = 7;
  write_trace_csv(t, dir / "t.csv");
  const auto back = read_trace_csv(dir / "t.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(std::isinf(back[0].best_fitness));
  EXPECT_EQ(back[1].best_fitness, 1.5);
  EXPECT_EQ(back[1].cum_calls, 42u);
  EXPECT_EQ(back[1].cum_rejects.classifier, 7u);
}

ExperimentConfig small_experiment(const fs::path& out) {
  ExperimentConfig c;
  c.problem = builtin_problem("tsmcoa");
  c.modes = {GateMode::SGA, GateMode::MGA, GateMode::MGA_MLSCP};
  c.runs = 3;
  c.ga.population = 6;
  c.ga.gen_max = 8;
  c.database_n = 300;
  c.training.classifier.hidden = {8};
  c.training.classifier.max_epochs = 10;
  c.training.regressor_mlp.hidden = {8};
  c.training.regressor_mlp.max_epochs = 10;
  c.training.regressed = {"pm"};
  c.training.log_features = true;
  c.output = out;
  c.seed = 5;
  c.paired_seeds = true;
  c.validate();
  return c;
}

TEST(Experiment, SummaryIsByteReproducible) {
  testing::ScratchDir a("exp-a"), b("exp-b");
  run_experiment(small_experiment(a.path()));
  run_experiment(small_experiment(b.path()));
  for (const char* f : {"summary.json", "summary.csv", "convergence.csv", "traces/MGA_MLSCP_2.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(testing::read_file(a / f), testing::read_file(b / f)) << f;
  }
}

TEST(Experiment, CallAccountingMatchesTraces) {
  testing::ScratchDir dir("exp-acc");
  const auto res = run_experiment(small_experiment(dir.path()));
  EXPECT_EQ(res.database_calls, 300u);
  ASSERT_EQ(res.traces.size(), 3u);
  for (std::size_t m = 0; m < res.traces.size(); ++m) {
    double sum = 0.0;
    for (const auto& t : res.traces[m]) sum += static_cast<double>(t.total_calls());
    EXPECT_DOUBLE_EQ(res.summary.rows[m].mean_calls, sum / 3.0);
    EXPECT_EQ(res.traces[m].size(), 3u);
  }
  const auto j = json::parse(testing::read_file(dir / "summary.json"));
  EXPECT_EQ(j.at("database_calls"), 300);
  EXPECT_EQ(j.at("modes").size(), 3u);
}

TEST(Experiment, SavedBundleIsReusedWithoutDatabaseCalls) {
  testing::ScratchDir dir("exp-bundle");
  auto c = small_experiment(dir / "run1");
  c.modes = {GateMode::MGA_MLSP};
  c.runs = 1;
  c.bundle_path = dir / "bundle";
  const auto first = run_experiment(c);
  EXPECT_FALSE(first.bundle_loaded);
  EXPECT_EQ(first.database_calls, 300u);
  EXPECT_TRUE(fs::exists(dir / "bundle" / "manifest.json"));
  c.output = dir / "run2";
  const auto second = run_experiment(c);
  EXPECT_TRUE(second.bundle_loaded);
  EXPECT_EQ(second.database_calls, 0u);
  EXPECT_EQ(second.summary.rows[0].fitness, first.summary.rows[0].fitness);
}

TEST(Experiment, MissingBundleWithoutTrainingIsAnError) {
  testing::ScratchDir dir("exp-nobundle");
  auto c = small_experiment(dir.path());
  c.bundle_path = dir / "absent";
  c.train_if_missing = false;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace sizer
