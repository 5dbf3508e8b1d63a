#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "sizer/optimizer.hpp"

namespace sizer {

/// Columns: generation, best_fitness, mean_fitness, cum_calls,
/// cum_reject_classifier, cum_reject_regressor, cum_reject_spice.
/// Infinite fitness (no feasible individual yet) is written as "inf".
void write_trace_csv(const RunTrace& t, const std::filesystem::path& path);
std::vector<GenerationRecord> read_trace_csv(const std::filesystem::path& path);

/// Per-run summary without timings: mode, seed, best design, call and
/// rejection totals.
nlohmann::json trace_summary(const RunTrace& t);

}  // namespace sizer
