// Trained surrogate models for one problem, their persistence and training.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sizer/core.hpp"
#include "sizer/forest.hpp"
#include "sizer/grid_search.hpp"
#include "sizer/mlp.hpp"
#include "sizer/sampling.hpp"
#include "sizer/scaler.hpp"

namespace sizer {

/// What the optimizer's gate needs from a set of surrogates. Models are
/// addressed by index; keys are transistor@context for classifiers and
/// constraint keys for regressors.
class FeasibilityPredictor {
 public:
  virtual ~FeasibilityPredictor() = default;
  virtual std::size_t classifier_count() const = 0;
  virtual const std::string& classifier_key(std::size_t i) const = 0;
  virtual double saturation_probability(std::size_t i, const DesignVector& x) const = 0;
  virtual std::size_t regressor_count() const = 0;
  virtual const std::string& regressor_key(std::size_t i) const = 0;
  virtual double predict_metric(std::size_t i, const DesignVector& x) const = 0;
};

using RegressorModel = std::variant<MlpModel, ForestModel>;

struct ModelReport {
  std::string key;
  std::string kind;   // "classifier" | "regressor"
  std::string model;  // e.g. "MLP(64,32)" or "RF(n=100)"
  double train_seconds = 0.0;
  std::optional<double> accuracy;
  std::optional<double> r2;
  std::optional<double> mae;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

struct Provenance {
  std::string problem;
  std::uint64_t dataset_hash = 0;
  std::uint64_t seed = 0;
  int model_version = 0;
  std::vector<std::string> log_targets;
};

class BundleFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SurrogateBundle final : public FeasibilityPredictor {
 public:
  /// MLP inputs are log10(x) before scaling; forests always see raw x.
  bool log_features = false;
  Scaler scaler;
  std::vector<std::pair<std::string, MlpModel>> classifiers;
  std::vector<std::pair<std::string, RegressorModel>> regressors;
  std::vector<ModelReport> report;
  Provenance provenance;

  std::size_t classifier_count() const override { return classifiers.size(); }
  const std::string& classifier_key(std::size_t i) const override { return classifiers[i].first; }
  double saturation_probability(std::size_t i, const DesignVector& x) const override;
  std::size_t regressor_count() const override { return regressors.size(); }
  const std::string& regressor_key(std::size_t i) const override { return regressors[i].first; }
  double predict_metric(std::size_t i, const DesignVector& x) const override;

  /// Throws std::invalid_argument unless every saturation key of `p` has a
  /// classifier and every regressor names a constraint of `p`.
  void check_against(const ProblemSpec& p) const;
};

/// Rows of `x` as the bundle's MLPs see them before scaling.
Eigen::MatrixXd mlp_features(const Eigen::MatrixXd& x, bool log_features);

void save_bundle(const SurrogateBundle& b, const std::filesystem::path& dir);
/// Throws BundleFormatError on a missing or corrupted manifest or model file.
SurrogateBundle load_bundle(const std::filesystem::path& dir);

/// Warning text when the bundle was trained on a different dataset.
std::optional<std::string> provenance_mismatch(const SurrogateBundle& b, std::uint64_t dataset_hash);

enum class RegressorFamily { Mlp, Forest };

struct TrainingSpec {
  MlpSpec classifier{.task = MlpTask::Classifier};
  MlpGrid classifier_grid;
  RegressorFamily regressor_family = RegressorFamily::Mlp;
  MlpSpec regressor_mlp{.task = MlpTask::Regressor};
  MlpGrid regressor_mlp_grid;
  ForestSpec regressor_rf;
  ForestGrid regressor_rf_grid;
  /// Constraint keys that get a regressor and are gated by it.
  std::vector<std::string> regressed;
  /// Regressed keys fitted on log10 of the target.
  std::vector<std::string> log_targets;
  /// Feed MLPs log10 of the design variables; needs positive lower bounds.
  bool log_features = false;
  int cv_folds = 3;
  /// Rows used for cross-validation; 0 uses the whole training set.
  std::size_t cv_rows = 0;

  void validate(const ProblemSpec& p) const;
};

void to_json(nlohmann::json& j, const TrainingSpec& s);
void from_json(const nlohmann::json& j, TrainingSpec& s);

/// Grid-searches, fits and tests one classifier per saturation key of the
/// dataset and one regressor per `spec.regressed` key. Models train
/// concurrently on up to `workers` threads with per-model seeds, so the
/// result does not depend on `workers`.
SurrogateBundle train_bundle(const Dataset& train, const Dataset& test, const TrainingSpec& spec,
                             std::uint64_t seed, std::size_t workers = 1);

}  // namespace sizer
