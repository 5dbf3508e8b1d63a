#include "sizer/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sizer/rng.hpp"

namespace sizer {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using nlohmann::json;

void MlpSpec::validate() const {
  if (hidden.empty()) throw std::invalid_argument("mlp: at least one hidden layer required");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("mlp: hidden layer sizes must be positive");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("mlp: learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("mlp: batch size must be positive");
  if (max_epochs < 1) throw std::invalid_argument("mlp: max epochs must be positive");
  if (patience < 1) throw std::invalid_argument("mlp: patience must be positive");
  if (tolerance < 0.0) throw std::invalid_argument("mlp: tolerance must be non-negative");
  if (l2 < 0.0) throw std::invalid_argument("mlp: l2 must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("mlp: validation fraction must lie in [0, 1)");
  }
  if (task == MlpTask::Classifier && transform != TargetTransform::None) {
    throw std::invalid_argument("mlp: target transforms apply to regressors only");
  }
}

std::string MlpSpec::label() const {
  std::string s = "MLP(";
  for (std::size_t i = 0; i < hidden.size(); ++i) s += (i ? "," : "") + std::to_string(hidden[i]);
  return s + ")";
}

void to_json(json& j, const MlpSpec& s) {
  j = {{"hidden", s.hidden},
       {"task", s.task == MlpTask::Classifier ? "classifier" : "regressor"},
       {"learning_rate", s.learning_rate},
       {"batch_size", s.batch_size},
       {"max_epochs", s.max_epochs},
       {"patience", s.patience},
       {"tolerance", s.tolerance},
       {"l2", s.l2},
       {"validation_fraction", s.validation_fraction},
       {"transform", s.transform == TargetTransform::Log10 ? "log10" : "none"}};
}

void from_json(const json& j, MlpSpec& s) {
  MlpSpec d;
  s.hidden = j.value("hidden", d.hidden);
  const auto task = j.value("task", std::string("classifier"));
  if (task != "classifier" && task != "regressor") {
    throw std::invalid_argument("mlp: unknown task '" + task + "'");
  }
  s.task = task == "classifier" ? MlpTask::Classifier : MlpTask::Regressor;
  s.learning_rate = j.value("learning_rate", d.learning_rate);
  s.batch_size = j.value("batch_size", d.batch_size);
  s.max_epochs = j.value("max_epochs", d.max_epochs);
  s.patience = j.value("patience", d.patience);
  s.tolerance = j.value("tolerance", d.tolerance);
  s.l2 = j.value("l2", d.l2);
  s.validation_fraction = j.value("validation_fraction", d.validation_fraction);
  const auto tr = j.value("transform", std::string("none"));
  if (tr != "none" && tr != "log10") throw std::invalid_argument("mlp: unknown transform '" + tr + "'");
  s.transform = tr == "log10" ? TargetTransform::Log10 : TargetTransform::None;
}

MlpModel::MlpModel(MlpSpec spec, int n_inputs, std::uint64_t seed)
    : spec_(std::move(spec)), n_inputs_(n_inputs) {
  spec_.validate();
  if (n_inputs < 1) throw std::invalid_argument("mlp: input count must be positive");
  std::vector<int> sizes{n_inputs};
  sizes.insert(sizes.end(), spec_.hidden.begin(), spec_.hidden.end());
  sizes.push_back(1);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    MatrixXd w(sizes[l + 1], sizes[l]);
    for (Index c = 0; c < w.cols(); ++c) {
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
    }
    w_.push_back(std::move(w));
    b_.push_back(VectorXd::Zero(sizes[l + 1]));
  }
}

void MlpModel::forward(const MatrixXd& a0, std::vector<MatrixXd>& acts) const {
  acts.resize(w_.size() + 1);
  acts[0] = a0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    acts[l + 1].noalias() = w_[l] * acts[l];
    acts[l + 1].colwise() += b_[l];
    if (l + 1 < w_.size()) acts[l + 1] = acts[l + 1].cwiseMax(0.0);
  }
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double MlpModel::backprop(const MatrixXd& a0, const RowVectorXd& y, std::vector<MatrixXd>& acts,
                          std::vector<MatrixXd>* gw, std::vector<VectorXd>* gb) const {
  forward(a0, acts);
  const auto m = static_cast<double>(a0.cols());
  const RowVectorXd z = acts.back().row(0);
  RowVectorXd delta(z.size());
  double loss = 0.0;
  if (spec_.task == MlpTask::Classifier) {
    for (Index i = 0; i < z.size(); ++i) {
      loss += softplus(z[i]) - y[i] * z[i];
      delta[i] = sigmoid(z[i]) - y[i];
    }
  } else {
    for (Index i = 0; i < z.size(); ++i) {
      const double r = z[i] - y[i];
      loss += 0.5 * r * r;
      delta[i] = r;
    }
  }
  double penalty = 0.0;
  for (const auto& w : w_) penalty += w.squaredNorm();
  loss = loss / m + 0.5 * spec_.l2 * penalty / m;
  if (gw == nullptr) return loss;

  gw->resize(w_.size());
  gb->resize(b_.size());
  MatrixXd d = delta / m;
  for (std::size_t l = w_.size(); l-- > 0;) {
    (*gw)[l].noalias() = d * acts[l].transpose();
    (*gw)[l] += (spec_.l2 / m) * w_[l];
    (*gb)[l] = d.rowwise().sum();
    if (l > 0) {
      MatrixXd back = w_[l].transpose() * d;
      d = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

double MlpModel::loss_and_gradient(const MatrixXd& x, const VectorXd& y_internal,
                                   VectorXd* grad) const {
  if (x.cols() != n_inputs_) throw std::invalid_argument("mlp: feature count mismatch");
  if (x.rows() != y_internal.size() || x.rows() == 0) {
    throw std::invalid_argument("mlp: row count mismatch");
  }
  std::vector<MatrixXd> acts, gw;
  std::vector<VectorXd> gb;
  const MatrixXd a0 = x.transpose();
  if (grad == nullptr) return backprop(a0, y_internal.transpose(), acts, nullptr, nullptr);
  const double loss = backprop(a0, y_internal.transpose(), acts, &gw, &gb);
  grad->resize(static_cast<Index>(parameter_count()));
  Index k = 0;
  for (std::size_t l = 0; l < gw.size(); ++l) {
    grad->segment(k, gw[l].size()) = gw[l].reshaped();
    k += gw[l].size();
    grad->segment(k, gb[l].size()) = gb[l];
    k += gb[l].size();
  }
  return loss;
}

double MlpModel::data_loss(const MatrixXd& x, const VectorXd& y_internal) const {
  MlpModel copy = *this;
  copy.spec_.l2 = 0.0;
  return copy.loss_and_gradient(x, y_internal, nullptr);
}

VectorXd MlpModel::to_internal(const VectorXd& y) const {
  if (spec_.task == MlpTask::Classifier) return y;
  VectorXd t = y;
  if (spec_.transform == TargetTransform::Log10) t = y.array().log10().matrix();
  return (t.array() - y_mean_) / y_scale_;
}

double MlpModel::output_to_user(double z) const {
  if (spec_.task == MlpTask::Classifier) return sigmoid(z);
  const double t = z * y_scale_ + y_mean_;
  return spec_.transform == TargetTransform::Log10 ? std::pow(10.0, t) : t;
}

VectorXd MlpModel::predict(const MatrixXd& x) const {
  if (x.cols() != n_inputs_) throw std::invalid_argument("mlp: feature count mismatch");
  std::vector<MatrixXd> acts;
  forward(x.transpose(), acts);
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = output_to_user(acts.back()(0, i));
  return out;
}

double MlpModel::predict_one(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_inputs_) throw std::invalid_argument("mlp: feature count mismatch");
  VectorXd a = Eigen::Map<const VectorXd>(x.data(), static_cast<Index>(x.size()));
  for (std::size_t l = 0; l < w_.size(); ++l) {
    VectorXd z = w_[l] * a + b_[l];
    a = l + 1 < w_.size() ? VectorXd(z.cwiseMax(0.0)) : z;
  }
  return output_to_user(a[0]);
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) n += static_cast<std::size_t>(w_[l].size() + b_[l].size());
  return n;
}

VectorXd MlpModel::parameters() const {
  VectorXd p(static_cast<Index>(parameter_count()));
  Index k = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    p.segment(k, w_[l].size()) = w_[l].reshaped();
    k += w_[l].size();
    p.segment(k, b_[l].size()) = b_[l];
    k += b_[l].size();
  }
  return p;
}

void MlpModel::set_parameters(const VectorXd& p) {
  if (p.size() != static_cast<Index>(parameter_count())) {
    throw std::invalid_argument("mlp: parameter vector has the wrong length");
  }
  Index k = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    w_[l].reshaped() = p.segment(k, w_[l].size());
    k += w_[l].size();
    b_[l] = p.segment(k, b_[l].size());
    k += b_[l].size();
  }
}

void MlpModel::set_target_scaling(double mean, double scale) {
  if (!std::isfinite(mean) || !(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("mlp: invalid target scaling");
  }
  y_mean_ = mean;
  y_scale_ = scale;
}

void to_json(json& j, const MlpModel& m) {
  json layers = json::array();
  for (std::size_t l = 0; l < m.w_.size(); ++l) {
    const auto& w = m.w_[l];
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", std::vector<double>(w.data(), w.data() + w.size())},
                      {"bias", std::vector<double>(m.b_[l].data(), m.b_[l].data() + m.b_[l].size())}});
  }
  j = {{"spec", m.spec_},
       {"n_inputs", m.n_inputs_},
       {"target_mean", m.y_mean_},
       {"target_scale", m.y_scale_},
       {"layers", layers}};
}

void from_json(const json& j, MlpModel& m) {
  MlpModel out;
  out.spec_ = j.at("spec").get<MlpSpec>();
  out.spec_.validate();
  out.n_inputs_ = j.at("n_inputs").get<int>();
  out.y_mean_ = j.at("target_mean").get<double>();
  out.y_scale_ = j.at("target_scale").get<double>();
  Index prev = out.n_inputs_;
  const auto& layers = j.at("layers");
  if (layers.size() != out.spec_.hidden.size() + 1) {
    throw std::invalid_argument("mlp: layer count does not match spec");
  }
  for (const auto& lj : layers) {
    const auto rows = lj.at("rows").get<Index>();
    const auto cols = lj.at("cols").get<Index>();
    const auto w = lj.at("weights").get<std::vector<double>>();
    const auto b = lj.at("bias").get<std::vector<double>>();
    if (cols != prev || static_cast<Index>(w.size()) != rows * cols ||
        static_cast<Index>(b.size()) != rows) {
      throw std::invalid_argument("mlp: inconsistent layer shape");
    }
    out.w_.push_back(Eigen::Map<const MatrixXd>(w.data(), rows, cols));
    out.b_.push_back(Eigen::Map<const VectorXd>(b.data(), rows));
    prev = rows;
  }
  if (prev != 1) throw std::invalid_argument("mlp: output layer must have one unit");
  m = std::move(out);
}

MlpModel fit_mlp(const MlpSpec& spec, const MatrixXd& x, const VectorXd& y, std::uint64_t seed) {
  spec.validate();
  const Index n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_mlp: empty training data");
  if (y.size() != n) throw std::invalid_argument("fit_mlp: target length mismatch");
  if (!x.allFinite()) throw std::invalid_argument("fit_mlp: non-finite features");
  if (!y.allFinite()) throw std::invalid_argument("fit_mlp: non-finite targets");

  MlpModel model(spec, static_cast<int>(x.cols()), derive_seed(seed, 1));
  if (spec.task == MlpTask::Classifier) {
    for (Index i = 0; i < n; ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) throw std::invalid_argument("fit_mlp: labels must be 0 or 1");
    }
  } else {
    VectorXd t = y;
    if (spec.transform == TargetTransform::Log10) {
      if ((y.array() <= 0.0).any()) {
        throw std::invalid_argument("fit_mlp: log10 transform needs positive targets");
      }
      t = y.array().log10().matrix();
    }
    const double mean = t.mean();
    const double sd = std::sqrt((t.array() - mean).square().mean());
    model.set_target_scaling(mean, sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0);
  }
  const VectorXd yi = model.to_internal(y);

  Rng rng(derive_seed(seed, 2));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Index n_val = static_cast<Index>(std::floor(spec.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = 0;
  const Index n_tr = n - n_val;

  MatrixXd xt(x.cols(), n_tr), xv(x.cols(), n_val);
  RowVectorXd yt(n_tr), yv(n_val);
  for (Index i = 0; i < n_tr; ++i) {
    xt.col(i) = x.row(order[static_cast<std::size_t>(i)]).transpose();
    yt[i] = yi[order[static_cast<std::size_t>(i)]];
  }
  for (Index i = 0; i < n_val; ++i) {
    xv.col(i) = x.row(order[static_cast<std::size_t>(n_tr + i)]).transpose();
    yv[i] = yi[order[static_cast<std::size_t>(n_tr + i)]];
  }

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const std::size_t layers = model.w_.size();
  std::vector<MatrixXd> mw(layers), vw(layers), gw, acts;
  std::vector<VectorXd> mb(layers), vb(layers), gb;
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = vw[l] = MatrixXd::Zero(model.w_[l].rows(), model.w_[l].cols());
    mb[l] = vb[l] = VectorXd::Zero(model.b_[l].size());
  }

  MlpModel eval_view = model;
  auto monitor_loss = [&]() {
    eval_view.w_ = model.w_;
    eval_view.b_ = model.b_;
    eval_view.spec_.l2 = 0.0;
    std::vector<MatrixXd> a;
    return n_val > 0 ? eval_view.backprop(xv, yv, a, nullptr, nullptr)
                     : eval_view.backprop(xt, yt, a, nullptr, nullptr);
  };

  std::vector<Index> batch_order(static_cast<std::size_t>(n_tr));
  std::iota(batch_order.begin(), batch_order.end(), 0);
  const Index bs = std::min<Index>(spec.batch_size, n_tr);
  MatrixXd xb;
  RowVectorXd ybt;
  double best = std::numeric_limits<double>::infinity();
  auto best_w = model.w_;
  auto best_b = model.b_;
  int wait = 0;
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < spec.max_epochs; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    for (Index start = 0; start < n_tr; start += bs) {
      const Index m = std::min(bs, n_tr - start);
      xb.resize(x.cols(), m);
      ybt.resize(m);
      for (Index i = 0; i < m; ++i) {
        const Index r = batch_order[static_cast<std::size_t>(start + i)];
        xb.col(i) = xt.col(r);
        ybt[i] = yt[r];
      }
      model.backprop(xb, ybt, acts, &gw, &gb);
      ++t;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
      const double step = spec.learning_rate * std::sqrt(c2) / c1;
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = kBeta1 * mw[l] + (1.0 - kBeta1) * gw[l];
        vw[l] = kBeta2 * vw[l] + (1.0 - kBeta2) * gw[l].cwiseAbs2();
        model.w_[l].array() -= step * mw[l].array() / (vw[l].array().sqrt() + kEps);
        mb[l] = kBeta1 * mb[l] + (1.0 - kBeta1) * gb[l];
        vb[l] = kBeta2 * vb[l] + (1.0 - kBeta2) * gb[l].cwiseAbs2();
        model.b_[l].array() -= step * mb[l].array() / (vb[l].array().sqrt() + kEps);
      }
    }
    const double loss = monitor_loss();
    wait = loss < best - spec.tolerance ? 0 : wait + 1;
    if (loss < best) {
      best = loss;
      best_w = model.w_;
      best_b = model.b_;
    }
    if (wait >= spec.patience) break;
  }
  if (std::isfinite(best)) {
    model.w_ = std::move(best_w);
    model.b_ = std::move(best_b);
  }
  return model;
}

}  // namespace sizer
