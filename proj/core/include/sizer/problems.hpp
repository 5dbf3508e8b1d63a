// The three built-in sizing problems: bandgap reference (BGR), folded-cascode
// op-amp (FCOA) and two-stage Miller-compensated op-amp (TSMCOA).
#pragma once

#include <string_view>
#include <vector>

#include "sizer/core.hpp"

namespace sizer {

namespace contexts {
inline constexpr std::string_view kTempM40 = "m40c";
inline constexpr std::string_view kTemp27 = "27c";
inline constexpr std::string_view kTemp125 = "125c";
inline constexpr std::string_view kIcmrMin = "icmr_min";
inline constexpr std::string_view kIcmrMax = "icmr_max";
}  // namespace contexts

ProblemSpec bgr_problem();
ProblemSpec fcoa_problem();
ProblemSpec tsmcoa_problem();

/// min x1^2 + x2^2 subject to x1 + x2 >= 1 on [0, 1]^2; optimum 0.5 at
/// (0.5, 0.5). Metrics "f" and "s" come from SyntheticAnalytic.
ProblemSpec synthetic_problem();

/// BGR, FCOA, TSMCOA in that order.
std::vector<ProblemSpec> builtin_problems();

/// Built-in problem (or "synthetic") by case-insensitive name; throws
/// std::invalid_argument.
ProblemSpec builtin_problem(std::string_view name);

}  // namespace sizer
