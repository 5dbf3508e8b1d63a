// Multi-run experiments, statistics and report files.
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sizer/bundle.hpp"
#include "sizer/config.hpp"
#include "sizer/optimizer.hpp"

namespace sizer {

/// Seed of run `run` of `mode`; with `paired` every mode shares the run seed.
std::uint64_t run_seed(std::uint64_t master, GateMode mode, std::size_t run, bool paired);

struct ModeSummary {
  GateMode mode = GateMode::MGA;
  std::size_t runs = 0;
  std::size_t feasible_runs = 0;
  // Optimal-fitness statistics over runs that found a feasible design; NaN
  // when none did. sd uses the n-1 denominator and is 0 for a single run.
  double best = 0.0, worst = 0.0, mean = 0.0, sd = 0.0;
  double mean_calls = 0.0;
  double median_calls = 0.0;
  std::vector<double> fitness;         // per run, +inf if infeasible
  std::vector<std::uint64_t> calls;    // per run
};

ModeSummary summarize(GateMode mode, const std::vector<RunTrace>& runs);

struct SummaryTable {
  std::vector<ModeSummary> rows;

  const ModeSummary* find(GateMode m) const;
  /// (calls(base) - calls(other)) / calls(base) from means, or from medians.
  std::optional<double> reduction(GateMode base, GateMode other, bool median = false) const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

struct TrainingOutcome {
  std::shared_ptr<const SurrogateBundle> bundle;
  std::uint64_t database_calls = 0;
  bool loaded = false;  // true: read from disk, nothing was evaluated
};

/// Database -> 80/20 split -> grid search and fit -> test metrics. Writes
/// dataset.csv (+ schema) under cfg.output and the bundle to cfg.bundle_path
/// when set.
TrainingOutcome train_models(const ExperimentConfig& cfg, const Evaluator& e);

/// Loads cfg.bundle_path when it holds a bundle, otherwise trains.
TrainingOutcome obtain_models(const ExperimentConfig& cfg, const Evaluator& e);

struct ExperimentResult {
  SummaryTable summary;
  std::uint64_t database_calls = 0;
  bool bundle_loaded = false;
  std::vector<std::vector<RunTrace>> traces;  // [mode][run]
  nlohmann::json summary_json;
};

/// Runs every configured mode cfg.runs times and writes summary.json,
/// summary.csv, convergence.csv and traces/<mode>_<run>.csv under
/// cfg.output. Only the per-run wall clock depends on timing; it is kept out
/// of summary.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct LabeledTrace {
  std::string label;
  std::vector<GenerationRecord> records;
};

struct ConvergenceTable {
  std::vector<double> calls;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;  // [series][grid point]

  std::string to_csv() const;
};

/// Best fitness against cumulative evaluator calls. A single trace passes
/// through at its own call counts; several are resampled onto `grid_points`
/// evenly spaced call counts from 0 to the largest final count, each taking
/// the value of its last record at or below the grid point (+inf before the
/// first one). Throws std::invalid_argument on an empty list.
ConvergenceTable report_convergence(const std::vector<LabeledTrace>& traces,
                                    std::size_t grid_points = 101);

/// One series per label: mean over that label's traces of their resampled
/// finite values.
ConvergenceTable average_convergence(const std::vector<LabeledTrace>& traces,
                                     std::size_t grid_points = 101);

}  // namespace sizer
