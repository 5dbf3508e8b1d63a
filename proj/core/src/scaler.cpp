#include <algorithm>
#include "sizer/scaler.hpp"

#include <stdexcept>
#include <vector>

#include <spdlog/spdlog.h>

namespace sizer {

Scaler::Scaler(Eigen::VectorXd mean, Eigen::VectorXd stddev)
    : mean_(std::move(mean)), std_(std::move(stddev)) {
  if (mean_.size() != std_.size()) throw std::invalid_argument("scaler: size mismatch");
  for (Eigen::Index i = 0; i < std_.size(); ++i) {
    if (!(std_[i] > 0.0)) throw std::invalid_argument("scaler: stddev must be positive");
  }
}

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw std::invalid_argument("scaler: no rows to fit");
  Eigen::VectorXd mean = x.colwise().mean().transpose();
  Eigen::VectorXd sd(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean[j]).square().mean();
    sd[j] = std::sqrt(var);
    // Rounding in the mean leaves ~1e-16 relative spread on a constant column.
    if (!(sd[j] > 1e-12 * std::max(1.0, std::abs(mean[j])))) {
      spdlog::warn("scaler: feature {} is constant, using unit scale", j);
      sd[j] = 1.0;
    }
  }
  return Scaler(std::move(mean), std::move(sd));
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean_.size()) throw std::invalid_argument("scaler: feature count mismatch");
  return (x.rowwise() - mean_.transpose()).array().rowwise() / std_.transpose().array();
}

Eigen::MatrixXd Scaler::inverse_transform(const Eigen::MatrixXd& z) const {
  if (z.cols() != mean_.size()) throw std::invalid_argument("scaler: feature count mismatch");
  return (z.array().rowwise() * std_.transpose().array()).matrix().rowwise() + mean_.transpose();
}

void Scaler::transform_row(const double* in, double* out) const {
  for (Eigen::Index j = 0; j < mean_.size(); ++j) out[j] = (in[j] - mean_[j]) / std_[j];
}

void to_json(nlohmann::json& j, const Scaler& s) {
  j = {{"mean", std::vector<double>(s.mean().begin(), s.mean().end())},
       {"stddev", std::vector<double>(s.stddev().begin(), s.stddev().end())}};
}

void from_json(const nlohmann::json& j, Scaler& s) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto d = j.at("stddev").get<std::vector<double>>();
  s = Scaler(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())),
             Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())));
}

}  // namespace sizer
