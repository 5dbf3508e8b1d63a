// Domain types shared by every sizing module: design vectors, bounds,
// constraints, problem definitions, evaluation results and the objective
// formulas used by the built-in circuits.
//
// All quantities are SI (m, ohm, A, V, W, Hz). Conversion to display units
// happens only when reports are written.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sizer {

/// A point in the D-dimensional sizing space. Every value is finite.
class DesignVector {
 public:
  DesignVector() = default;
  explicit DesignVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }

  friend bool operator==(const DesignVector&, const DesignVector&) = default;

 private:
  std::vector<double> values_;
};

/// Per-dimension box [lower, upper] with lower < upper everywhere.
class Bounds {
 public:
  Bounds() = default;
  Bounds(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const noexcept { return lower_.size(); }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }
  double width(std::size_t i) const { return upper_[i] - lower_[i]; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  bool contains(const DesignVector& x) const;

  friend bool operator==(const Bounds&, const Bounds&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

enum class Comparator { GreaterEqual, LessEqual };

std::string_view to_string(Comparator c);
Comparator comparator_from_string(std::string_view s);

/// "name" or "name@context".
std::string metric_key(std::string_view name, std::string_view context = {});

/// One specification limit on an evaluator metric. Comparison is inclusive.
struct ConstraintSpec {
  std::string metric;
  Comparator comparator = Comparator::GreaterEqual;
  double threshold = 0.0;
  std::string context;

  std::string key() const { return metric_key(metric, context); }
  bool satisfied(double value) const;
  /// Shortfall relative to |threshold|; zero when satisfied.
  double violation(double value) const;
  void validate() const;

  friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

/// Constraints that depend on geometry only and never need an evaluator.
struct GeometryConstraint {
  enum class Kind { AspectRatio, Length, Area };
  Kind kind = Kind::AspectRatio;
  std::optional<double> min;
  std::optional<double> max;

  friend bool operator==(const GeometryConstraint&, const GeometryConstraint&) = default;
};

std::string_view to_string(GeometryConstraint::Kind k);

/// A set of matched transistors sharing one width variable. The multiplicity
/// of the group is the number of physical devices it contains.
struct DeviceGroup {
  std::vector<std::string> devices;
  std::size_t width_var = 0;
  std::optional<std::size_t> length_var;  // unset: fixed `length`
  double length = 0.0;

  std::size_t multiplicity() const noexcept { return devices.size(); }
  friend bool operator==(const DeviceGroup&, const DeviceGroup&) = default;
};

struct Variable {
  std::string name;
  std::string unit;
  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Area and power weights of a combined objective.
struct WeightedObjective {
  double alpha = 1.0;
  double beta = 0.0;
  std::string power_metric = "power";

  void validate() const;
  friend bool operator==(const WeightedObjective&, const WeightedObjective&) = default;
};

/// Minimize an evaluator metric; `absolute` minimizes its magnitude.
struct MetricObjective {
  std::string key;
  bool absolute = false;
  friend bool operator==(const MetricObjective&, const MetricObjective&) = default;
};

/// Minimize total gate area computed from the device groups.
struct AreaObjective {
  friend bool operator==(const AreaObjective&, const AreaObjective&) = default;
};

using Objective = std::variant<MetricObjective, AreaObjective, WeightedObjective>;

enum class FailureKind { None, Unrealizable, MissingBinary, Timeout, MalformedOutput, ProcessError };

std::string_view to_string(FailureKind k);

/// Output of one evaluator call. A failed result carries its failure kind and
/// no metric is ever defaulted to zero.
struct EvaluationResult {
  std::map<std::string, double> metrics;
  std::map<std::string, bool> saturation;  // key: transistor@context
  FailureKind failure = FailureKind::None;
  std::string message;

  bool ok() const noexcept { return failure == FailureKind::None; }
  std::optional<double> metric(const std::string& key) const;
  std::optional<bool> saturated(const std::string& key) const;

  static EvaluationResult failed(FailureKind kind, std::string message);

  friend bool operator==(const EvaluationResult&, const EvaluationResult&) = default;
};

struct GeometryReport {
  bool ok = true;
  double violation = 0.0;
  std::vector<std::string> failures;
};

struct ProblemSpec {
  std::string name;
  std::vector<Variable> variables;
  Bounds bounds;
  Objective objective = AreaObjective{};
  std::vector<ConstraintSpec> constraints;
  std::vector<GeometryConstraint> geometry;
  std::vector<DeviceGroup> devices;
  std::vector<std::string> transistors;
  std::vector<std::string> saturation_contexts;
  /// Name of the built-in evaluator able to run this problem, empty if none.
  std::string evaluator;

  std::size_t dim() const noexcept { return variables.size(); }
  std::size_t transistor_count() const noexcept { return transistors.size(); }
  std::vector<std::string> saturation_keys() const;

  /// Widths and lengths of every physical transistor, groups expanded.
  std::pair<std::vector<double>, std::vector<double>> device_geometry(const DesignVector& x) const;
  double area(const DesignVector& x) const;
  GeometryReport check_geometry(const DesignVector& x) const;

  void validate() const;

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

struct ConstraintOutcome {
  std::string key;
  std::optional<double> value;  // nullopt: metric missing
  bool pass = false;
  double violation = 0.0;
};

struct SaturationOutcome {
  std::string key;
  std::optional<bool> value;
  bool pass = false;
};

struct FeasibilityReport {
  std::vector<ConstraintOutcome> constraints;
  std::vector<SaturationOutcome> saturation;
  bool constraints_ok = false;
  bool saturation_ok = false;
  bool overall = false;

  /// Sum of normalized constraint shortfalls plus one per unsaturated or
  /// missing transistor flag.
  double violation() const;
};

/// Temperature coefficient in ppm/degC over the -40..125 degC span. Signed.
double compute_tc(double vref_m40, double vref_125, double vref_27);

/// Sum of W*L over physical transistors.
double compute_area(std::span<const double> widths, std::span<const double> lengths);

double weighted_fitness(double area, double power, const WeightedObjective& w);

FeasibilityReport check_constraints(const EvaluationResult& r, const ProblemSpec& p);

/// Objective value of an evaluated design, nullopt if the result lacks the
/// metrics the objective needs.
std::optional<double> objective_value(const ProblemSpec& p, const DesignVector& x,
                                      const EvaluationResult& r);

}  // namespace sizer
