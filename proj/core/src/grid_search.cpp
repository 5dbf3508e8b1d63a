#include "sizer/grid_search.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "sizer/metrics.hpp"
#include "sizer/rng.hpp"

namespace sizer {

using Eigen::Index;
using nlohmann::json;

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold: k must be at least 2");
  if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("k-fold: fewer rows than folds");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) folds[i % folds.size()].push_back(idx[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

GridResult grid_search(std::vector<json> cells, std::size_t n_rows, int k_folds,
                       std::uint64_t seed, const CvScorer& score) {
  if (cells.empty()) throw std::invalid_argument("grid search: empty grid");
  const auto folds = kfold_indices(n_rows, k_folds, seed);
  GridResult out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CvCell cell{std::move(cells[c]), {}, 0.0};
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<std::size_t> train;
      for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(train.begin(), train.end());
      cell.fold_scores.push_back(score(c, train, folds[f]));
    }
    cell.mean_score = std::accumulate(cell.fold_scores.begin(), cell.fold_scores.end(), 0.0) /
                      static_cast<double>(cell.fold_scores.size());
    if (c == 0 || cell.mean_score > out.cells[out.best_index].mean_score) out.best_index = c;
    out.cells.push_back(std::move(cell));
  }
  return out;
}

std::vector<MlpSpec> MlpGrid::expand(const MlpSpec& base) const {
  const auto hs = hidden.empty() ? std::vector<std::vector<int>>{base.hidden} : hidden;
  const auto lrs = learning_rate.empty() ? std::vector<double>{base.learning_rate} : learning_rate;
  const auto l2s = l2.empty() ? std::vector<double>{base.l2} : l2;
  std::vector<MlpSpec> out;
  for (const auto& h : hs) {
    for (double lr : lrs) {
      for (double a : l2s) {
        MlpSpec s = base;
        s.hidden = h;
        s.learning_rate = lr;
        s.l2 = a;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<ForestSpec> ForestGrid::expand(const ForestSpec& base) const {
  const auto ns = n_estimators.empty() ? std::vector<int>{base.n_estimators} : n_estimators;
  const auto ds = max_depth.empty() ? std::vector<std::optional<int>>{base.max_depth} : max_depth;
  const auto ls = min_samples_leaf.empty() ? std::vector<int>{base.min_samples_leaf} : min_samples_leaf;
  std::vector<ForestSpec> out;
  for (int n : ns) {
    for (const auto& d : ds) {
      for (int l : ls) {
        ForestSpec s = base;
        s.n_estimators = n;
        s.max_depth = d;
        s.min_samples_leaf = l;
        out.push_back(s);
      }
    }
  }
  return out;
}

void to_json(json& j, const MlpGrid& g) {
  j = {{"hidden", g.hidden}, {"learning_rate", g.learning_rate}, {"l2", g.l2}};
}

void from_json(const json& j, MlpGrid& g) {
  g.hidden = j.value("hidden", std::vector<std::vector<int>>{});
  g.learning_rate = j.value("learning_rate", std::vector<double>{});
  g.l2 = j.value("l2", std::vector<double>{});
}

void to_json(json& j, const ForestGrid& g) {
  json depths = json::array();
  for (const auto& d : g.max_depth) depths.push_back(d ? json(*d) : json(nullptr));
  j = {{"n_estimators", g.n_estimators}, {"max_depth", depths}, {"min_samples_leaf", g.min_samples_leaf}};
}

void from_json(const json& j, ForestGrid& g) {
  g.n_estimators = j.value("n_estimators", std::vector<int>{});
  g.max_depth.clear();
  if (j.contains("max_depth")) {
    for (const auto& d : j.at("max_depth")) {
      g.max_depth.push_back(d.is_null() ? std::nullopt : std::optional<int>(d.get<int>()));
    }
  }
  g.min_samples_leaf = j.value("min_samples_leaf", std::vector<int>{});
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(rows[i]));
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = y[static_cast<Index>(rows[i])];
  return out;
}

double score_predictions(bool classifier, const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (classifier) {
    std::vector<std::uint8_t> p(static_cast<std::size_t>(pred.size())), t(p.size());
    for (Index i = 0; i < pred.size(); ++i) {
      p[static_cast<std::size_t>(i)] = pred[i] >= 0.5;
      t[static_cast<std::size_t>(i)] = truth[i] >= 0.5;
    }
    return accuracy(p, t);
  }
  return r2(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
            std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())));
}

}  // namespace

GridResult grid_search_mlp(const std::vector<MlpSpec>& grid, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, int k_folds, std::uint64_t seed) {
  std::vector<json> cells(grid.begin(), grid.end());
  return grid_search(std::move(cells), static_cast<std::size_t>(x.rows()), k_folds, seed,
                     [&](std::size_t c, auto train, auto val) {
                       const auto m = fit_mlp(grid[c], take_rows(x, train), take(y, train),
                                              derive_seed(seed, c));
                       return score_predictions(grid[c].task == MlpTask::Classifier,
                                                m.predict(take_rows(x, val)), take(y, val));
                     });
}

GridResult grid_search_rf(const std::vector<ForestSpec>& grid, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, int k_folds, std::uint64_t seed,
                          std::size_t workers) {
  std::vector<json> cells(grid.begin(), grid.end());
  return grid_search(std::move(cells), static_cast<std::size_t>(x.rows()), k_folds, seed,
                     [&](std::size_t c, auto train, auto val) {
                       const auto m = fit_rf(grid[c], take_rows(x, train), take(y, train), workers);
                       return score_predictions(false, m.predict(take_rows(x, val)), take(y, val));
                     });
}

}  // namespace sizer
