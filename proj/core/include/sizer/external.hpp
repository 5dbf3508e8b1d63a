// Adapter that runs an external circuit simulator once per evaluation.
//
// Each call renders the netlist template into a private temporary directory,
// runs the configured command there and parses the metric file it leaves
// behind. Metric file lines:
//
//   metric <name> [context] <value>
//   saturation <transistor> [context] <0|1>
//
// Blank lines are ignored; anything else is a format error.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sizer/evaluator.hpp"

namespace sizer {

struct ExternalSimConfig {
  /// Shell command; "{input}" expands to the rendered netlist path.
  std::string command;
  std::filesystem::path netlist_template;
  /// Parent of the per-call temporary directories. Empty: system temp dir.
  std::filesystem::path working_directory;
  double timeout_seconds = 60.0;
  std::string metric_file = "metrics.txt";

  void validate() const;
};

inline constexpr std::string_view kInputPlaceholder = "{input}";

class MetricFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses metric-file text; throws MetricFormatError with the line number.
EvaluationResult parse_metric_file(std::string_view text);

/// Replaces every {{name}} with the matching value. Throws if the template
/// lacks a placeholder for any variable.
std::string render_netlist(std::string_view tmpl, const std::vector<std::string>& names,
                           const DesignVector& x);

class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(ExternalSimConfig cfg, std::vector<std::string> variable_names);

 protected:
  EvaluationResult do_evaluate(const DesignVector& x) const override;

 private:
  ExternalSimConfig cfg_;
  std::vector<std::string> names_;
  std::string template_;
};

}  // namespace sizer
