#include "sizer/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sizer/parallel.hpp"
#include "sizer/rng.hpp"

namespace sizer {

using Eigen::Index;
using nlohmann::json;

void ForestSpec::validate() const {
  if (n_estimators < 1) throw std::invalid_argument("forest: n_estimators must be at least 1");
  if (max_depth && *max_depth < 1) throw std::invalid_argument("forest: max_depth must be positive");
  if (min_samples_leaf < 1) throw std::invalid_argument("forest: min_samples_leaf must be positive");
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) {
    throw std::invalid_argument("forest: feature_subsample must lie in (0, 1]");
  }
}

std::string ForestSpec::label() const { return "RF(n=" + std::to_string(n_estimators) + ")"; }

void to_json(json& j, const ForestSpec& s) {
  j = {{"n_estimators", s.n_estimators},
       {"max_depth", s.max_depth ? json(*s.max_depth) : json(nullptr)},
       {"min_samples_leaf", s.min_samples_leaf},
       {"bootstrap", s.bootstrap},
       {"feature_subsample", s.feature_subsample},
       {"seed", s.seed}};
}

void from_json(const json& j, ForestSpec& s) {
  ForestSpec d;
  s.n_estimators = j.value("n_estimators", d.n_estimators);
  s.max_depth.reset();
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) s.max_depth = j.at("max_depth").get<int>();
  s.min_samples_leaf = j.value("min_samples_leaf", d.min_samples_leaf);
  s.bootstrap = j.value("bootstrap", d.bootstrap);
  s.feature_subsample = j.value("feature_subsample", d.feature_subsample);
  s.seed = j.value("seed", d.seed);
}

double RegressionTree::predict_one(std::span<const double> x) const {
  if (nodes_.empty()) throw std::logic_error("tree: empty");
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t n_left = 0;
};

// Gains closer than this (relative to the node's SSE) count as equal, so the
// deterministic tie-break is not defeated by rounding.
constexpr double kGainTieRel = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestSpec& spec,
              std::uint64_t seed)
      : x_(x), y_(y), spec_(spec), rng_(seed) {
    const int d = static_cast<int>(x.cols());
    n_try_ = std::max(1, static_cast<int>(std::floor(spec.feature_subsample * d)));
    features_.resize(static_cast<std::size_t>(d));
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(rows.begin(), rows.end(), 0);
    return std::move(nodes_);
  }

 private:
  using It = std::vector<std::size_t>::iterator;

  int grow(It first, It last, int depth) {
    const auto n = static_cast<std::size_t>(last - first);
    double sum = 0.0, sq = 0.0;
    for (It it = first; it != last; ++it) {
      const double v = y_[static_cast<Index>(*it)];
      sum += v;
      sq += v * v;
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, sum / static_cast<double>(n)});

    const double sse = sq - sum * sum / static_cast<double>(n);
    const bool depth_ok = !spec_.max_depth || depth < *spec_.max_depth;
    const auto leaf = static_cast<std::size_t>(spec_.min_samples_leaf);
    if (!depth_ok || n < 2 * leaf || !(sse > 0.0)) return id;

    const Split s = best_split(first, last, sse, sum);
    if (s.feature < 0) return id;

    It mid = std::partition(first, last, [&](std::size_t r) {
      return x_(static_cast<Index>(r), s.feature) <= s.threshold;
    });
    const int l = grow(first, mid, depth + 1);
    const int r = grow(mid, last, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split best_split(It first, It last, double sse, double total) {
    // Draw features in random order; examine n_try of them, continuing past
    // that only while none of the examined ones admits a split.
    std::shuffle(features_.begin(), features_.end(), rng_);
    std::vector<int> tried;
    Split best;
    std::size_t k = 0;
    while (k < features_.size() && (static_cast<int>(k) < n_try_ || best.feature < 0)) {
      tried.push_back(features_[k++]);
      if (static_cast<int>(k) >= n_try_) {
        std::sort(tried.begin(), tried.end());
        best = Split{};
        for (int f : tried) consider(first, last, f, sse, total, best);
      }
    }
    return best;
  }

  void consider(It first, It last, int f, double sse, double total, Split& best) {
    const auto n = static_cast<std::size_t>(last - first);
    order_.assign(first, last);
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return x_(static_cast<Index>(a), f) < x_(static_cast<Index>(b), f);
    });
    const auto leaf = static_cast<std::size_t>(spec_.min_samples_leaf);
    double left_sum = 0.0;
    const double tie = kGainTieRel * sse;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += y_[static_cast<Index>(order_[i])];
      const double a = x_(static_cast<Index>(order_[i]), f);
      const double b = x_(static_cast<Index>(order_[i + 1]), f);
      const std::size_t nl = i + 1, nr = n - nl;
      if (!(a < b) || nl < leaf || nr < leaf) continue;
      const double right_sum = total - left_sum;
      // SSE reduction = nl*mean_l^2 + nr*mean_r^2 - n*mean^2.
      const double gain = left_sum * left_sum / static_cast<double>(nl) +
                          right_sum * right_sum / static_cast<double>(nr) -
                          total * total / static_cast<double>(n);
      double thr = a + (b - a) / 2.0;
      if (!(thr < b)) thr = a;  // adjacent doubles
      if (best.feature < 0 ? gain > tie : gain > best.gain + tie) {
        best = Split{f, thr, gain, nl};
      }
    }
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const ForestSpec& spec_;
  Rng rng_;
  int n_try_ = 1;
  std::vector<int> features_;
  std::vector<std::size_t> order_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        std::vector<std::size_t> rows, const ForestSpec& spec, std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("fit_tree: no rows");
  TreeBuilder b(x, y, spec, seed);
  return RegressionTree(b.build(std::move(rows)));
}

ForestModel::ForestModel(ForestSpec spec, int n_inputs, std::vector<RegressionTree> trees)
    : spec_(std::move(spec)), n_inputs_(n_inputs), trees_(std::move(trees)) {
  if (trees_.empty()) throw std::invalid_argument("forest: no trees");
}

double ForestModel::predict_one(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_inputs_) throw std::invalid_argument("forest: feature count mismatch");
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict_one(x);
  return s / static_cast<double>(trees_.size());
}

Eigen::VectorXd ForestModel::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != n_inputs_) throw std::invalid_argument("forest: feature count mismatch");
  Eigen::VectorXd out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    out[i] = predict_one(row);
  }
  return out;
}

void to_json(json& j, const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees_) {
    json nodes = json::array();
    for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  j = {{"spec", m.spec_}, {"n_inputs", m.n_inputs_}, {"trees", trees}};
}

void from_json(const json& j, ForestModel& m) {
  const auto spec = j.at("spec").get<ForestSpec>();
  spec.validate();
  const int n_inputs = j.at("n_inputs").get<int>();
  std::vector<RegressionTree> trees;
  for (const auto& tj : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& nj : tj) {
      TreeNode n{nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(),
                 nj.at(3).get<int>(), nj.at(4).get<double>()};
      nodes.push_back(n);
    }
    const int count = static_cast<int>(nodes.size());
    for (const auto& n : nodes) {
      if (n.feature >= n_inputs || (n.feature >= 0 && (n.left <= 0 || n.left >= count ||
                                                       n.right <= 0 || n.right >= count))) {
        throw std::invalid_argument("forest: malformed tree");
      }
    }
    if (nodes.empty()) throw std::invalid_argument("forest: empty tree");
    trees.emplace_back(std::move(nodes));
  }
  m = ForestModel(spec, n_inputs, std::move(trees));
}

ForestModel fit_rf(const ForestSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   std::size_t workers) {
  spec.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw std::invalid_argument("fit_rf: empty training data");
  if (y.size() != x.rows()) throw std::invalid_argument("fit_rf: target length mismatch");
  if (!y.allFinite()) throw std::invalid_argument("fit_rf: non-finite targets");
  std::vector<RegressionTree> trees(static_cast<std::size_t>(spec.n_estimators));
  parallel_for(trees.size(), workers, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(spec.seed, t);
    std::vector<std::size_t> rows(n);
    if (spec.bootstrap) {
      Rng rng(derive_seed(seed, 0));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees[t] = fit_tree(x, y, std::move(rows), spec, derive_seed(seed, 1));
  });
  return ForestModel(spec, static_cast<int>(x.cols()), std::move(trees));
}

}  // namespace sizer
