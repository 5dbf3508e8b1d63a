// Test metrics reported per surrogate model.
#pragma once

#include <cstdint>
#include <span>

namespace sizer {

/// Fraction of positions where pred equals truth.
double accuracy(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

/// 1 - SS_res/SS_tot. With constant truth: 1 for an exact prediction, else 0.
double r2(std::span<const double> pred, std::span<const double> truth);

double mae(std::span<const double> pred, std::span<const double> truth);

}  // namespace sizer
