// Fully connected network with ReLU hidden layers, trained with Adam on
// mini-batches. A classifier has a logistic output and binary cross-entropy
// loss; a regressor has an identity output and squared-error loss on
// standardized targets.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace sizer {

enum class MlpTask { Classifier, Regressor };

/// Regression targets may be fitted on log10 when they span decades.
enum class TargetTransform { None, Log10 };

struct MlpSpec {
  std::vector<int> hidden{128, 64, 16};
  MlpTask task = MlpTask::Classifier;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int max_epochs = 500;
  int patience = 20;           // epochs without validation improvement
  double tolerance = 1e-4;     // minimum validation-loss improvement
  double l2 = 1e-4;
  double validation_fraction = 0.1;
  TargetTransform transform = TargetTransform::None;

  void validate() const;
  /// "MLP(128,64,16)".
  std::string label() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

void to_json(nlohmann::json& j, const MlpSpec& s);
void from_json(const nlohmann::json& j, MlpSpec& s);

class MlpModel {
 public:
  MlpModel() = default;
  /// Glorot-uniform weights, zero biases.
  MlpModel(MlpSpec spec, int n_inputs, std::uint64_t seed);

  const MlpSpec& spec() const noexcept { return spec_; }
  int n_inputs() const noexcept { return n_inputs_; }
  std::size_t n_layers() const noexcept { return w_.size(); }

  /// Rows of `x` are samples. Classifier: probability of class 1.
  /// Regressor: prediction in the original target units.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  double predict_one(std::span<const double> x) const;

  /// Mean training loss plus l2/(2m) * sum of squared weights, in internal
  /// target units, with its gradient flattened in parameters() order.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_internal,
                           Eigen::VectorXd* grad) const;
  /// Mean data loss without the penalty.
  double data_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_internal) const;

  /// Targets mapped to the units the network is trained in.
  Eigen::VectorXd to_internal(const Eigen::VectorXd& y) const;

  std::size_t parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);

  std::vector<Eigen::MatrixXd>& weights() noexcept { return w_; }
  std::vector<Eigen::VectorXd>& biases() noexcept { return b_; }
  const std::vector<Eigen::MatrixXd>& weights() const noexcept { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const noexcept { return b_; }

  void set_target_scaling(double mean, double scale);
  double target_mean() const noexcept { return y_mean_; }
  double target_scale() const noexcept { return y_scale_; }

  friend void to_json(nlohmann::json& j, const MlpModel& m);
  friend void from_json(const nlohmann::json& j, MlpModel& m);
  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  friend MlpModel fit_mlp(const MlpSpec&, const Eigen::MatrixXd&, const Eigen::VectorXd&,
                          std::uint64_t);

  double output_to_user(double z) const;
  /// a0 holds samples as columns. acts[l] receives the activation of layer l;
  /// the last entry is the raw output.
  void forward(const Eigen::MatrixXd& a0, std::vector<Eigen::MatrixXd>& acts) const;
  double backprop(const Eigen::MatrixXd& a0, const Eigen::RowVectorXd& y,
                  std::vector<Eigen::MatrixXd>& acts, std::vector<Eigen::MatrixXd>* gw,
                  std::vector<Eigen::VectorXd>* gb) const;

  MlpSpec spec_;
  int n_inputs_ = 0;
  std::vector<Eigen::MatrixXd> w_;  // layer l maps size(l) -> size(l+1)
  std::vector<Eigen::VectorXd> b_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
};

/// Trains on already standardized features. Classifier targets must be 0 or
/// 1; regressor targets finite (and positive under Log10). Deterministic for
/// a fixed seed.
MlpModel fit_mlp(const MlpSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 std::uint64_t seed);

}  // namespace sizer
