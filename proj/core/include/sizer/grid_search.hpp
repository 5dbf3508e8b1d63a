// Exhaustive k-fold cross-validated search over model hyperparameters.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sizer/forest.hpp"
#include "sizer/mlp.hpp"

namespace sizer {

/// Row indices of each validation fold. Every row lands in exactly one fold;
/// fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k, std::uint64_t seed);

struct CvCell {
  nlohmann::json params;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct GridResult {
  std::size_t best_index = 0;
  std::vector<CvCell> cells;
};

/// score(cell, train_rows, validation_rows) -> higher is better. The best
/// cell is the first one in grid order reaching the maximum mean score.
using CvScorer = std::function<double(std::size_t, std::span<const std::size_t>,
                                      std::span<const std::size_t>)>;
GridResult grid_search(std::vector<nlohmann::json> cells, std::size_t n_rows, int k_folds,
                       std::uint64_t seed, const CvScorer& score);

struct MlpGrid {
  std::vector<std::vector<int>> hidden;
  std::vector<double> learning_rate;
  std::vector<double> l2;

  /// Cartesian product in (hidden, learning_rate, l2) order; empty axes take
  /// the base value.
  std::vector<MlpSpec> expand(const MlpSpec& base) const;
};

struct ForestGrid {
  std::vector<int> n_estimators;
  std::vector<std::optional<int>> max_depth;
  std::vector<int> min_samples_leaf;

  std::vector<ForestSpec> expand(const ForestSpec& base) const;
};

void to_json(nlohmann::json& j, const MlpGrid& g);
void from_json(const nlohmann::json& j, MlpGrid& g);
void to_json(nlohmann::json& j, const ForestGrid& g);
void from_json(const nlohmann::json& j, ForestGrid& g);

/// Accuracy (classifier) or R^2 (regressor) CV over the grid cells.
GridResult grid_search_mlp(const std::vector<MlpSpec>& grid, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, int k_folds, std::uint64_t seed);
GridResult grid_search_rf(const std::vector<ForestSpec>& grid, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, int k_folds, std::uint64_t seed,
                          std::size_t workers = 1);

}  // namespace sizer
