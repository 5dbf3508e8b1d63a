#include "sizer/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace sizer {

namespace {
template <typename T>
void check_sizes(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw std::invalid_argument("metric: length mismatch");
  if (a.empty()) throw std::invalid_argument("metric: empty input");
}
}  // namespace

double accuracy(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  check_sizes(pred, truth);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += (pred[i] != 0) == (truth[i] != 0);
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred, truth);
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace sizer
