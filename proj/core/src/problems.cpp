#include "sizer/problems.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace sizer {

namespace {

constexpr double kNano = 1e-9;
constexpr double kMicro = 1e-6;

ConstraintSpec ge(std::string metric, double threshold, std::string_view context = {}) {
  return {std::move(metric), Comparator::GreaterEqual, threshold, std::string(context)};
}

ConstraintSpec le(std::string metric, double threshold, std::string_view context = {}) {
  return {std::move(metric), Comparator::LessEqual, threshold, std::string(context)};
}

GeometryConstraint aspect(double lo, double hi) {
  return {GeometryConstraint::Kind::AspectRatio, lo, hi};
}

}  // namespace

ProblemSpec bgr_problem() {
  ProblemSpec p;
  p.name = "bgr";
  p.variables = {{"w12", "m"}, {"w34", "m"}, {"w5", "m"},  {"r1", "ohm"},
                 {"r2", "ohm"}, {"l12", "m"}, {"l34", "m"}, {"l5", "m"}};
  p.bounds = Bounds({180 * kNano, 180 * kNano, 180 * kNano, 500.0, 1e3, 180 * kNano, 180 * kNano,
                     180 * kNano},
                    {50 * kMicro, 50 * kMicro, 50 * kMicro, 5e3, 150e3, 1 * kMicro, 1 * kMicro,
                     1 * kMicro});
  p.objective = MetricObjective{"tc", true};
  p.constraints = {
      ge("psrr", 15.0),
      le("dvref", 5e-3),
      le("power", 600e-6),
      le("noise", 2e-6),
  };
  p.geometry = {
      {GeometryConstraint::Kind::Area, std::nullopt, 500e-12},
      aspect(1.0, 100.0),
      {GeometryConstraint::Kind::Length, 180 * kNano, 5 * kMicro},
  };
  p.devices = {
      {{"M1", "M2"}, 0, 5, 0.0},
      {{"M3", "M4"}, 1, 6, 0.0},
      {{"M5"}, 2, 7, 0.0},
  };
  p.transistors = {"M1", "M2", "M3", "M4", "M5"};
  p.saturation_contexts = {std::string(contexts::kTempM40), std::string(contexts::kTemp125)};
  p.evaluator = "bgr_analytic";
  return p;
}

ProblemSpec fcoa_problem() {
  constexpr double kLength = 180 * kNano;
  ProblemSpec p;
  p.name = "fcoa";
  p.variables = {{"w12", "m"}, {"w34bp", "m"},  {"wbn5", "m"},  {"w67", "m"},
                 {"w89", "m"}, {"w1011", "m"}, {"ibias", "A"}};
  const double wmin = 4.0 / 3.0 * kLength;
  const double wmax = 300.0 * kLength;
  p.bounds = Bounds({wmin, wmin, wmin, wmin, wmin, wmin, 1 * kMicro},
                    {wmax, wmax, wmax, wmax, wmax, wmax, 1e-3});
  p.objective = AreaObjective{};
  p.constraints = {
      ge("av", 40.0), le("power", 5e-3), ge("sr", 20e6), ge("ugb", 40e6), ge("pm", 60.0),
  };
  p.geometry = {aspect(4.0 / 3.0, 300.0)};
  p.devices = {
      {{"M1", "M2"}, 0, std::nullopt, kLength},  {{"M3", "M4", "Mbp"}, 1, std::nullopt, kLength},
      {{"Mbn", "M5"}, 2, std::nullopt, kLength}, {{"M6", "M7"}, 3, std::nullopt, kLength},
      {{"M8", "M9"}, 4, std::nullopt, kLength},  {{"M10", "M11"}, 5, std::nullopt, kLength},
  };
  p.transistors = {"M1", "M2", "M3", "M4",  "M5",  "M6", "M7",
                   "M8", "M9", "M10", "M11", "Mbn", "Mbp"};
  return p;
}

ProblemSpec tsmcoa_problem() {
  constexpr double kLength = 60 * kNano;
  ProblemSpec p;
  p.name = "tsmcoa";
  p.variables = {{"w12", "m"}, {"w34", "m"}, {"w58", "m"},
                 {"w6", "m"},  {"w7", "m"},  {"ibias", "A"}};
  const double wmin = 2.0 * kLength;
  const double wmax = 200.0 * kLength;
  p.bounds = Bounds({wmin, wmin, wmin, wmin, wmin, 1 * kMicro},
                    {wmax, wmax, wmax, wmax, wmax, 100 * kMicro});
  p.objective = AreaObjective{};
  const auto lo = contexts::kIcmrMin;
  const auto hi = contexts::kIcmrMax;
  p.constraints = {
      ge("av", 20.0, lo),   ge("av", 20.0, hi),   le("power", 400e-6),   ge("sr", 100e6),
      ge("f3db", 10e6),     ge("ugb", 100e6, lo), ge("ugb", 100e6, hi),  ge("pm", 60.0),
      le("sn", 60e-9, lo), le("sn", 60e-9, hi),
  };
  p.geometry = {aspect(2.0, 200.0)};
  p.devices = {
      {{"M1", "M2"}, 0, std::nullopt, kLength}, {{"M3", "M4"}, 1, std::nullopt, kLength},
      {{"M5", "M8"}, 2, std::nullopt, kLength}, {{"M6"}, 3, std::nullopt, kLength},
      {{"M7"}, 4, std::nullopt, kLength},
  };
  p.transistors = {"M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8"};
  p.saturation_contexts = {std::string(lo), std::string(hi)};
  p.evaluator = "tsmcoa_analytic";
  return p;
}

std::vector<ProblemSpec> builtin_problems() {
  return {bgr_problem(), fcoa_problem(), tsmcoa_problem()};
}

ProblemSpec synthetic_problem() {
  ProblemSpec p;
  p.name = "synthetic";
  p.variables = {{"x1", ""}, {"x2", ""}};
  p.bounds = Bounds({0.0, 0.0}, {1.0, 1.0});
  p.objective = MetricObjective{"f", false};
  p.constraints = {ge("s", 1.0)};
  p.evaluator = "synthetic_analytic";
  return p;
}

ProblemSpec builtin_problem(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto& p : builtin_problems()) {
    if (p.name == lower) return p;
  }
  if (lower == "synthetic") return synthetic_problem();
  throw std::invalid_argument("unknown built-in problem '" + std::string(name) + "'");
}

}  // namespace sizer
