#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace sizer {

/// Per-feature z-score standardization fitted on training rows.
class Scaler {
 public:
  Scaler() = default;
  Scaler(Eigen::VectorXd mean, Eigen::VectorXd stddev);

  /// Constant columns get stddev 1; their indices are logged as a warning.
  static Scaler fit(const Eigen::MatrixXd& x);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& z) const;
  void transform_row(const double* in, double* out) const;

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::VectorXd& stddev() const noexcept { return std_; }
  Eigen::Index dim() const noexcept { return mean_.size(); }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
};

void to_json(nlohmann::json& j, const Scaler& s);
void from_json(const nlohmann::json& j, Scaler& s);

}  // namespace sizer
