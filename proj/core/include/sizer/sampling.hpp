// Latin hypercube sampling and construction of the offline training
// database.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sizer/core.hpp"
#include "sizer/evaluator.hpp"

namespace sizer {

/// n x D matrix; every column holds one value per equal-width stratum of its
/// bound interval, placed uniformly within the stratum.
Eigen::MatrixXd lhs_sample(std::size_t n, const Bounds& bounds, std::uint64_t seed);

struct Dataset {
  std::string problem;
  std::uint64_t seed = 0;
  Bounds bounds;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;  // n x D
  /// Metric key -> per-row value; NaN where the evaluation failed or the
  /// metric was missing.
  std::map<std::string, Eigen::VectorXd> targets;
  /// transistor@context -> per-row flag; failed rows are 0.
  std::map<std::string, std::vector<std::uint8_t>> labels;
  std::vector<FailureKind> failures;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Rows `idx` in the given order.
  Dataset subset(const std::vector<std::size_t>& idx) const;
  void validate() const;
};

class DatabaseError : public std::runtime_error {
 public:
  DatabaseError(std::size_t index, const std::string& what)
      : std::runtime_error("point " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Metric keys a dataset records for `p`: every constraint and a metric
/// objective.
std::vector<std::string> recorded_metrics(const ProblemSpec& p);

/// Evaluates n LHS points. Row i always holds the i-th LHS point. Exceptions
/// thrown by the evaluator surface as DatabaseError carrying the row index.
Dataset build_database(const ProblemSpec& p, const Evaluator& e, std::size_t n,
                       std::uint64_t seed, std::size_t workers = 1);

/// Shuffled partition into floor(n*f) training rows and the rest.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed);

/// FNV-1a over the numeric content, used as bundle provenance.
std::uint64_t dataset_hash(const Dataset& d);

/// Writes `path` (CSV) and `<stem>.schema.json` beside it.
void save_dataset(const Dataset& d, const std::filesystem::path& csv_path);
Dataset load_dataset(const std::filesystem::path& csv_path);
std::filesystem::path schema_path(const std::filesystem::path& csv_path);

}  // namespace sizer
