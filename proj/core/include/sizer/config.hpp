// Experiment configuration file (JSON).
//
//   {
//     "problem": "tsmcoa" | {"file": "problems/x.json"} | {"spec": {...}},
//     "evaluator": {"kind": "analytic"} |
//                  {"kind": "external", "command": "...", "netlist_template": "...",
//                   "working_directory": "...", "timeout_seconds": 60, "metric_file": "..."},
//     "modes": ["SGA", "MGA", "MGA_MLSP", "MGA_MLSCP"],
//     "runs": 20,
//     "ga": {"population": 20, "gen_max": 200, "alpha_start": 1.0, "alpha_end": 0.05,
//            "retry_budget": 50, "surrogate_retry_budget": 500},
//     "database": {"n": 20000, "train_fraction": 0.8},
//     "training": { see TrainingSpec },
//     "bundle": {"path": "bundle", "train_if_missing": true},
//     "output": "out",
//     "seed": 1,
//     "workers": 1,
//     "parallel_runs": false,
//     "paired_seeds": false
//   }
//
// Relative paths resolve against the directory of the config file.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sizer/bundle.hpp"
#include "sizer/core.hpp"
#include "sizer/external.hpp"
#include "sizer/optimizer.hpp"

namespace sizer {

/// Validation failure; `path()` names the offending field, e.g. "ga.population".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class EvaluatorKind { Analytic, External };

struct ExperimentConfig {
  ProblemSpec problem;
  EvaluatorKind evaluator = EvaluatorKind::Analytic;
  ExternalSimConfig external;
  std::vector<GateMode> modes;
  std::size_t runs = 20;
  GaConfig ga;
  std::size_t database_n = 2000;
  double train_fraction = 0.8;
  TrainingSpec training;
  std::filesystem::path bundle_path;  // empty: train in memory, do not persist
  bool train_if_missing = true;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool parallel_runs = false;
  /// Run r of every mode uses the same seed instead of a per-mode one.
  bool paired_seeds = false;

  bool needs_models() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Throws ConfigError with the field path on any malformed or invalid entry.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Evaluator described by the config: the problem's built-in analytic model
/// or the external adapter.
std::shared_ptr<const Evaluator> make_evaluator(const ExperimentConfig& cfg);

}  // namespace sizer
