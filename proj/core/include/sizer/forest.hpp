// CART regression trees and bootstrap forests.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace sizer {

struct ForestSpec {
  int n_estimators = 100;
  std::optional<int> max_depth;  // unset: grow until pure or min_samples_leaf
  int min_samples_leaf = 1;
  bool bootstrap = true;
  /// Fraction of features examined per split; at least one.
  double feature_subsample = 1.0 / 3.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::string label() const;  // "RF(n=100)"
  friend bool operator==(const ForestSpec&, const ForestSpec&) = default;
};

void to_json(nlohmann::json& j, const ForestSpec& s);
void from_json(const nlohmann::json& j, ForestSpec& s);

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the node's samples
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict_one(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

/// Variance-reduction CART on rows `rows` of (x, y). Candidate thresholds are
/// midpoints between consecutive distinct values. Equal gains resolve to the
/// lowest feature index, then the lowest threshold.
RegressionTree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        std::vector<std::size_t> rows, const ForestSpec& spec,
                        std::uint64_t seed);

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(ForestSpec spec, int n_inputs, std::vector<RegressionTree> trees);

  const ForestSpec& spec() const noexcept { return spec_; }
  int n_inputs() const noexcept { return n_inputs_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

  /// Mean of the tree predictions.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  double predict_one(std::span<const double> x) const;

  friend void to_json(nlohmann::json& j, const ForestModel& m);
  friend void from_json(const nlohmann::json& j, ForestModel& m);
  friend bool operator==(const ForestModel&, const ForestModel&) = default;

 private:
  ForestSpec spec_;
  int n_inputs_ = 0;
  std::vector<RegressionTree> trees_;
};

/// Trees are built on up to `workers` threads; tree t always uses a seed
/// derived from (spec.seed, t), so the result does not depend on `workers`.
ForestModel fit_rf(const ForestSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   std::size_t workers = 1);

}  // namespace sizer
