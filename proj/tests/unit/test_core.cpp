#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sizer/core.hpp"
#include "sizer/problem_io.hpp"
#include "sizer/problems.hpp"
#include "oracles/reference_designs.hpp"
#include "support.hpp"

namespace sizer {
namespace {

// Hand arithmetic: 1 mV * 1e6 / (1.0805 V * 165 degC) = 1000 / 178.2825.
constexpr double kTcExample = 1000.0 / 178.2825;

TEST(ComputeTc, FlatReferenceIsZero) { EXPECT_EQ(compute_tc(1.0, 1.0, 1.0), 0.0); }

TEST(ComputeTc, HandComputedExample) {
  EXPECT_NEAR(compute_tc(1.080, 1.081, 1.0805), kTcExample, 1e-9);
}

TEST(ComputeTc, SwappedEndpointsFlipSign) {
  EXPECT_NEAR(compute_tc(1.081, 1.080, 1.0805), -kTcExample, 1e-9);
}

TEST(ComputeTc, AntisymmetricAndScaleCovariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(0.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const double a = v(rng), b = v(rng), c = v(rng);
    EXPECT_EQ(compute_tc(a, b, c), -compute_tc(b, a, c));
    const double k = std::ldexp(1.0, i % 7 - 3);  // power of two: exact scaling
    EXPECT_EQ(compute_tc(k * a, k * b, k * c), compute_tc(a, b, c));
  }
}

TEST(ComputeTc, RejectsNonPositiveReference) {
  EXPECT_THROW(compute_tc(1.0, 1.0, 0.0), std::domain_error);
  EXPECT_THROW(compute_tc(1.0, 1.0, -1.0), std::domain_error);
}

TEST(ComputeArea, SingleTransistor) {
  const double w[] = {1e-6}, l[] = {1e-6};
  EXPECT_DOUBLE_EQ(compute_area(w, l), 1e-12);
}

TEST(ComputeArea, LengthMismatchThrows) {
  const double w[] = {1e-6, 2e-6}, l[] = {1e-6};
  EXPECT_THROW(compute_area(w, l), std::invalid_argument);
}

TEST(ComputeArea, LinearInWidths) {
  const auto p = tsmcoa_problem();
  const DesignVector x({300e-9, 700e-9, 150e-9, 1.2e-6, 200e-9, 30e-6});
  const DesignVector x2({600e-9, 1400e-9, 300e-9, 2.4e-6, 400e-9, 30e-6});
  EXPECT_DOUBLE_EQ(p.area(x2), 2.0 * p.area(x));
}

using testing::kFcoaColumns;
using testing::kTsmcoaColumns;
using testing::sig4;
using testing::to_si;

TEST(ComputeArea, GroupExpansionMatchesHandSums) {
  const auto ts = tsmcoa_problem();
  for (const auto& c : kTsmcoaColumns) {
    EXPECT_NEAR(ts.area(to_si(c)) * 1e12, c.hand_sum_nm * 60.0 * 1e-6, 1e-12) << c.label;
  }
  const auto fc = fcoa_problem();
  for (const auto& c : kFcoaColumns) {
    EXPECT_NEAR(fc.area(to_si(c)) * 1e12, c.hand_sum_nm * 180.0 * 1e-6, 1e-12) << c.label;
  }
}

// Columns whose printed area follows from the printed parameters. The
// TSMCOA MGA and FCOA SGA columns do not; the acceptance report covers them.
TEST(ComputeArea, ReferenceAreasToFourFigures) {
  const auto ts = tsmcoa_problem();
  for (std::size_t i : {0u, 2u, 3u}) {
    EXPECT_DOUBLE_EQ(sig4(ts.area(to_si(kTsmcoaColumns[i])) * 1e12), kTsmcoaColumns[i].table_um2)
        << kTsmcoaColumns[i].label;
  }
  const auto fc = fcoa_problem();
  for (std::size_t i : {1u, 2u, 3u}) {
    EXPECT_DOUBLE_EQ(sig4(fc.area(to_si(kFcoaColumns[i])) * 1e12), kFcoaColumns[i].table_um2)
        << kFcoaColumns[i].label;
  }
}

TEST(WeightedFitness, Reductions) {
  EXPECT_EQ(weighted_fitness(3e-12, 5e-4, {1.0, 0.0, "power"}), 3e-12);
  EXPECT_EQ(weighted_fitness(0.0, 5e-4, {1.0, 1.0, "power"}), 5e-4);
  EXPECT_DOUBLE_EQ(weighted_fitness(2.0, 3.0, {0.5, 2.0, "power"}), 7.0);
}

TEST(WeightedObjective, RejectsInvalidWeights) {
  EXPECT_THROW((WeightedObjective{-1.0, 1.0, "power"}.validate()), std::invalid_argument);
  EXPECT_THROW((WeightedObjective{0.0, 0.0, "power"}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((WeightedObjective{0.0, 1.0, "power"}.validate()));
}

ProblemSpec two_constraint_problem() {
  ProblemSpec p;
  p.name = "toy";
  p.variables = {{"a", ""}};
  p.bounds = Bounds({0.0}, {1.0});
  p.objective = MetricObjective{"f", false};
  p.constraints = {{"gain", Comparator::GreaterEqual, 40.0, ""},
                   {"power", Comparator::LessEqual, 1e-3, ""}};
  p.transistors = {"M1", "M2"};
  p.saturation_contexts = {"c"};
  return p;
}

EvaluationResult passing_result() {
  EvaluationResult r;
  r.metrics = {{"gain", 40.0}, {"power", 1e-3}};
  r.saturation = {{"M1@c", true}, {"M2@c", true}};
  return r;
}

TEST(CheckConstraints, BoundaryIsInclusive) {
  const auto rep = check_constraints(passing_result(), two_constraint_problem());
  EXPECT_TRUE(rep.constraints_ok);
  EXPECT_TRUE(rep.saturation_ok);
  EXPECT_TRUE(rep.overall);
  EXPECT_EQ(rep.violation(), 0.0);
}

TEST(CheckConstraints, OneUnsaturatedTransistorFails) {
  auto r = passing_result();
  r.saturation["M2@c"] = false;
  const auto rep = check_constraints(r, two_constraint_problem());
  EXPECT_TRUE(rep.constraints_ok);
  EXPECT_FALSE(rep.saturation_ok);
  EXPECT_FALSE(rep.overall);
  EXPECT_EQ(rep.violation(), 1.0);
}

TEST(CheckConstraints, MissingMetricIsAFailureNotAnException) {
  auto r = passing_result();
  r.metrics.erase("power");
  const auto rep = check_constraints(r, two_constraint_problem());
  EXPECT_FALSE(rep.constraints_ok);
  EXPECT_FALSE(rep.constraints[1].value.has_value());
  EXPECT_FALSE(rep.overall);
}

TEST(CheckConstraints, ViolationIsRelativeShortfall) {
  auto r = passing_result();
  r.metrics["gain"] = 30.0;
  r.metrics["power"] = 1.5e-3;
  const auto rep = check_constraints(r, two_constraint_problem());
  EXPECT_NEAR(rep.violation(), 0.25 + 0.5, 1e-12);
}

TEST(CheckConstraints, MonotoneInSatisfyingDirection) {
  const auto p = two_constraint_problem();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> gain(20.0, 60.0), power(0.2e-3, 2e-3), step(0.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    auto r = passing_result();
    r.metrics["gain"] = gain(rng);
    r.metrics["power"] = power(rng);
    const bool before = check_constraints(r, p).overall;
    r.metrics["gain"] += step(rng);
    r.metrics["power"] -= step(rng) * 1e-5;
    if (before) EXPECT_TRUE(check_constraints(r, p).overall);
  }
}

TEST(CheckConstraints, TsmcoaReferenceMlscpColumnPasses) {
  const auto p = tsmcoa_problem();
  EvaluationResult r;
  for (const char* ctx : {"icmr_min", "icmr_max"}) {
    r.metrics[metric_key("av", ctx)] = 21.87;
    r.metrics[metric_key("ugb", ctx)] = 152.5e6;
    r.metrics[metric_key("sn", ctx)] = 53.36e-9;
    for (const auto& t : p.transistors) r.saturation[metric_key(t, ctx)] = true;
  }
  r.metrics["f3db"] = 12.99e6;
  r.metrics["pm"] = 60.1;
  r.metrics["sr"] = 264e6;
  r.metrics["power"] = 100e-6;  // not printed in the table; any compliant value
  EXPECT_TRUE(check_constraints(r, p).overall);
}

TEST(BuiltinProblems, ShapesAndBounds) {
  const auto all = builtin_problems();
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].name, "bgr");
  EXPECT_EQ(all[1].name, "fcoa");
  EXPECT_EQ(all[2].name, "tsmcoa");

  const auto& bgr = all[0];
  EXPECT_EQ(bgr.dim(), 8u);
  EXPECT_EQ(bgr.saturation_contexts, (std::vector<std::string>{"m40c", "125c"}));
  EXPECT_DOUBLE_EQ(bgr.bounds.lower(3), 500.0);
  EXPECT_DOUBLE_EQ(bgr.bounds.upper(4), 150e3);

  const auto& fcoa = all[1];
  EXPECT_EQ(fcoa.dim(), 7u);
  EXPECT_DOUBLE_EQ(fcoa.bounds.lower(6), 1e-6);
  EXPECT_DOUBLE_EQ(fcoa.bounds.upper(6), 1e-3);
  EXPECT_EQ(fcoa.transistor_count(), 13u);

  const auto& ts = all[2];
  EXPECT_EQ(ts.dim(), 6u);
  EXPECT_DOUBLE_EQ(ts.bounds.lower(5), 1e-6);
  EXPECT_DOUBLE_EQ(ts.bounds.upper(5), 100e-6);
  EXPECT_EQ(ts.saturation_keys().size(), 16u);
  for (const auto& p : all) EXPECT_NO_THROW(p.validate()) << p.name;
}

TEST(BuiltinProblems, LookupIsCaseInsensitive) {
  EXPECT_EQ(builtin_problem("TSMCOA").name, "tsmcoa");
  EXPECT_EQ(builtin_problem("synthetic").dim(), 2u);
  EXPECT_THROW(builtin_problem("nope"), std::invalid_argument);
}

TEST(Geometry, AspectRatioCheckedWithoutEvaluator) {
  const auto p = tsmcoa_problem();
  const DesignVector ok({300e-9, 700e-9, 150e-9, 1.2e-6, 200e-9, 30e-6});
  EXPECT_TRUE(p.check_geometry(ok).ok);
  // W/L below 2 cannot occur inside the bounds; shrink one width past them.
  const DesignVector narrow({60e-9, 700e-9, 150e-9, 1.2e-6, 200e-9, 30e-6});
  const auto rep = p.check_geometry(narrow);
  EXPECT_FALSE(rep.ok);
  EXPECT_GT(rep.violation, 0.0);
}

TEST(ProblemIo, RoundTripsEveryBuiltin) {
  testing::ScratchDir dir("problem");
  for (const auto& p : builtin_problems()) {
    save_problem(p, dir / (p.name + ".json"));
    EXPECT_EQ(load_problem(dir / (p.name + ".json")), p) << p.name;
  }
}

TEST(ProblemIo, ShippedProblemFilesMatchBuiltins) {
  const std::filesystem::path dir = std::filesystem::path(SIZER_SOURCE_DIR) / "configs" / "problems";
  for (const auto& p : builtin_problems()) {
    EXPECT_EQ(load_problem(dir / (p.name + ".json")), p) << p.name;
  }
}

TEST(DesignVector, RejectsNonFinite) {
  EXPECT_THROW(DesignVector({1.0, NAN}), std::invalid_argument);
  EXPECT_THROW(DesignVector({INFINITY}), std::invalid_argument);
}

TEST(Bounds, RejectsInvertedInterval) {
  EXPECT_THROW(Bounds({1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(Bounds({0.0, 0.0}, {1.0}), std::invalid_argument);
}

}  // namespace
}  // namespace sizer
