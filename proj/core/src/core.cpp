#include "sizer/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace sizer {

DesignVector::DesignVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("DesignVector: value " + std::to_string(i) + " is not finite");
    }
  }
}

Bounds::Bounds(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty()) throw std::invalid_argument("Bounds: empty");
  if (lower_.size() != upper_.size()) {
    throw std::invalid_argument("Bounds: lower/upper length mismatch");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
      throw std::invalid_argument("Bounds: dimension " + std::to_string(i) +
                                  " requires finite lower < upper");
    }
  }
}

bool Bounds::contains(const DesignVector& x) const {
  if (x.dim() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
  }
  return true;
}

std::string_view to_string(Comparator c) {
  return c == Comparator::GreaterEqual ? ">=" : "<=";
}

Comparator comparator_from_string(std::string_view s) {
  if (s == ">=") return Comparator::GreaterEqual;
  if (s == "<=") return Comparator::LessEqual;
  throw std::invalid_argument("unknown comparator '" + std::string(s) + "'");
}

std::string metric_key(std::string_view name, std::string_view context) {
  std::string key(name);
  if (!context.empty()) {
    key += '@';
    key += context;
  }
  return key;
}

bool ConstraintSpec::satisfied(double value) const {
  if (!std::isfinite(value)) return false;
  return comparator == Comparator::GreaterEqual ? value >= threshold : value <= threshold;
}

double ConstraintSpec::violation(double value) const {
  if (!std::isfinite(value)) return 1.0;
  const double shortfall =
      comparator == Comparator::GreaterEqual ? threshold - value : value - threshold;
  if (shortfall <= 0.0) return 0.0;
  const double scale = threshold != 0.0 ? std::abs(threshold) : 1.0;
  return shortfall / scale;
}

void ConstraintSpec::validate() const {
  if (metric.empty()) throw std::invalid_argument("constraint metric is empty");
  if (!std::isfinite(threshold)) {
    throw std::invalid_argument("constraint '" + key() + "' has a non-finite threshold");
  }
}

std::string_view to_string(GeometryConstraint::Kind k) {
  switch (k) {
    case GeometryConstraint::Kind::AspectRatio: return "aspect_ratio";
    case GeometryConstraint::Kind::Length: return "length";
    case GeometryConstraint::Kind::Area: return "area";
  }
  return "?";
}

void WeightedObjective::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0)) {
    throw std::invalid_argument("weighted objective needs alpha, beta >= 0 and alpha + beta > 0");
  }
}

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::None: return "none";
    case FailureKind::Unrealizable: return "unrealizable";
    case FailureKind::MissingBinary: return "missing_binary";
    case FailureKind::Timeout: return "timeout";
    case FailureKind::MalformedOutput: return "malformed_output";
    case FailureKind::ProcessError: return "process_error";
  }
  return "?";
}

std::optional<double> EvaluationResult::metric(const std::string& key) const {
  if (auto it = metrics.find(key); it != metrics.end()) return it->second;
  return std::nullopt;
}

std::optional<bool> EvaluationResult::saturated(const std::string& key) const {
  if (auto it = saturation.find(key); it != saturation.end()) return it->second;
  return std::nullopt;
}

EvaluationResult EvaluationResult::failed(FailureKind kind, std::string message) {
  EvaluationResult r;
  r.failure = kind;
  r.message = std::move(message);
  return r;
}

std::vector<std::string> ProblemSpec::saturation_keys() const {
  std::vector<std::string> keys;
  keys.reserve(transistors.size() * std::max<std::size_t>(1, saturation_contexts.size()));
  for (const auto& t : transistors) {
    if (saturation_contexts.empty()) {
      keys.push_back(t);
    } else {
      for (const auto& c : saturation_contexts) keys.push_back(metric_key(t, c));
    }
  }
  return keys;
}

std::pair<std::vector<double>, std::vector<double>> ProblemSpec::device_geometry(
    const DesignVector& x) const {
  if (x.dim() != dim()) throw std::invalid_argument("device_geometry: dimension mismatch");
  std::vector<double> w, l;
  for (const auto& g : devices) {
    const double width = x[g.width_var];
    const double length = g.length_var ? x[*g.length_var] : g.length;
    for (std::size_t k = 0; k < g.multiplicity(); ++k) {
      w.push_back(width);
      l.push_back(length);
    }
  }
  return {std::move(w), std::move(l)};
}

double ProblemSpec::area(const DesignVector& x) const {
  if (devices.empty()) throw std::logic_error("problem '" + name + "' has no device geometry");
  const auto [w, l] = device_geometry(x);
  return compute_area(w, l);
}

GeometryReport ProblemSpec::check_geometry(const DesignVector& x) const {
  GeometryReport rep;
  if (geometry.empty()) return rep;
  auto violate = [&](double v, const GeometryConstraint& g, std::string what) {
    double shortfall = 0.0;
    if (g.min && v < *g.min) shortfall = (*g.min - v) / std::abs(*g.min);
    if (g.max && v > *g.max) shortfall = (v - *g.max) / std::abs(*g.max);
    if (shortfall > 0.0) {
      rep.ok = false;
      rep.violation += shortfall;
      rep.failures.push_back(std::move(what));
    }
  };
  for (const auto& g : geometry) {
    switch (g.kind) {
      case GeometryConstraint::Kind::AspectRatio:
      case GeometryConstraint::Kind::Length:
        for (const auto& grp : devices) {
          const double width = x[grp.width_var];
          const double length = grp.length_var ? x[*grp.length_var] : grp.length;
          const double v = g.kind == GeometryConstraint::Kind::Length ? length : width / length;
          violate(v, g, std::string(to_string(g.kind)) + ":" + grp.devices.front());
        }
        break;
      case GeometryConstraint::Kind::Area:
        violate(area(x), g, "area");
        break;
    }
  }
  return rep;
}

void ProblemSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("problem name is empty");
  if (variables.empty()) throw std::invalid_argument("problem '" + name + "' has no variables");
  if (bounds.dim() != variables.size()) {
    throw std::invalid_argument("problem '" + name + "': bounds dimension " +
                                std::to_string(bounds.dim()) + " != " +
                                std::to_string(variables.size()) + " variables");
  }
  for (const auto& c : constraints) c.validate();
  for (const auto& g : devices) {
    if (g.devices.empty()) throw std::invalid_argument("device group without devices");
    if (g.width_var >= dim()) throw std::invalid_argument("device group width index out of range");
    if (g.length_var && *g.length_var >= dim()) {
      throw std::invalid_argument("device group length index out of range");
    }
    if (!g.length_var && !(g.length > 0.0)) {
      throw std::invalid_argument("device group fixed length must be positive");
    }
  }
  std::set<std::string> seen(transistors.begin(), transistors.end());
  if (seen.size() != transistors.size()) {
    throw std::invalid_argument("problem '" + name + "' lists a transistor twice");
  }
  if (const auto* w = std::get_if<WeightedObjective>(&objective)) w->validate();
  if (const auto* m = std::get_if<MetricObjective>(&objective); m && m->key.empty()) {
    throw std::invalid_argument("metric objective without a metric key");
  }
  const bool needs_area = std::holds_alternative<AreaObjective>(objective) ||
                          std::holds_alternative<WeightedObjective>(objective);
  if (needs_area && devices.empty()) {
    throw std::invalid_argument("problem '" + name + "': area objective needs device groups");
  }
}

double FeasibilityReport::violation() const {
  double v = 0.0;
  for (const auto& c : constraints) v += c.violation;
  for (const auto& s : saturation) {
    if (!s.pass) v += 1.0;
  }
  return v;
}

double compute_tc(double vref_m40, double vref_125, double vref_27) {
  if (!(vref_27 > 0.0)) throw std::domain_error("compute_tc: V_REF at 27 degC must be positive");
  return (vref_125 - vref_m40) * 1e6 / (vref_27 * 165.0);
}

double compute_area(std::span<const double> widths, std::span<const double> lengths) {
  if (widths.size() != lengths.size()) {
    throw std::invalid_argument("compute_area: widths and lengths differ in length");
  }
  double a = 0.0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (!(widths[i] > 0.0) || !(lengths[i] > 0.0)) {
      throw std::invalid_argument("compute_area: dimensions must be positive");
    }
    a += widths[i] * lengths[i];
  }
  return a;
}

double weighted_fitness(double area, double power, const WeightedObjective& w) {
  return w.alpha * area + w.beta * power;
}

FeasibilityReport check_constraints(const EvaluationResult& r, const ProblemSpec& p) {
  FeasibilityReport rep;
  rep.constraints.reserve(p.constraints.size());
  bool all_c = true;
  for (const auto& c : p.constraints) {
    ConstraintOutcome o;
    o.key = c.key();
    o.value = r.ok() ? r.metric(o.key) : std::nullopt;
    if (o.value) {
      o.pass = c.satisfied(*o.value);
      o.violation = c.violation(*o.value);
    } else {
      o.pass = false;
      o.violation = 1.0;
    }
    all_c = all_c && o.pass;
    rep.constraints.push_back(std::move(o));
  }
  bool all_s = true;
  for (auto& key : p.saturation_keys()) {
    SaturationOutcome s;
    s.key = std::move(key);
    s.value = r.ok() ? r.saturated(s.key) : std::nullopt;
    s.pass = s.value.value_or(false);
    all_s = all_s && s.pass;
    rep.saturation.push_back(std::move(s));
  }
  rep.constraints_ok = all_c && r.ok();
  rep.saturation_ok = all_s && r.ok();
  rep.overall = rep.constraints_ok && rep.saturation_ok;
  return rep;
}

std::optional<double> objective_value(const ProblemSpec& p, const DesignVector& x,
                                      const EvaluationResult& r) {
  return std::visit(
      [&](const auto& obj) -> std::optional<double> {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, MetricObjective>) {
          auto v = r.metric(obj.key);
          if (!v || !std::isfinite(*v)) return std::nullopt;
          return obj.absolute ? std::abs(*v) : *v;
        } else if constexpr (std::is_same_v<T, AreaObjective>) {
          return p.area(x);
        } else {
          auto power = r.metric(obj.power_metric);
          if (obj.beta != 0.0 && !power) return std::nullopt;
          return weighted_fitness(p.area(x), power.value_or(0.0), obj);
        }
      },
      p.objective);
}

}  // namespace sizer
