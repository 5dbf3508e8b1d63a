#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "sizer/analytic.hpp"
#include "sizer/problems.hpp"
#include "sizer/sampling.hpp"
#include "support.hpp"

namespace sizer {
namespace {

Bounds box() { return Bounds({0.0, -5.0, 1e-6}, {1.0, 5.0, 3e-6}); }

// Stratum index of v, computed directly from the bounds.
std::size_t stratum(double v, double lo, double hi, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(n)));
  return std::min(k, n - 1);
}

TEST(Lhs, EveryStratumHoldsExactlyOnePoint) {
  for (std::size_t n : {1u, 2u, 7u, 100u, 1000u}) {
    const auto b = box();
    const auto s = lhs_sample(n, b, 11 + n);
    ASSERT_EQ(static_cast<std::size_t>(s.rows()), n);
    ASSERT_EQ(static_cast<std::size_t>(s.cols()), b.dim());
    for (std::size_t j = 0; j < b.dim(); ++j) {
      std::vector<int> hist(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        ASSERT_GE(v, b.lower(j));
        ASSERT_LE(v, b.upper(j));
        ++hist[stratum(v, b.lower(j), b.upper(j), n)];
      }
      EXPECT_TRUE(std::all_of(hist.begin(), hist.end(), [](int c) { return c == 1; }))
          << "n=" << n << " column " << j;
    }
  }
}

TEST(Lhs, DeterministicPerSeed) {
  EXPECT_EQ(lhs_sample(50, box(), 3), lhs_sample(50, box(), 3));
  EXPECT_NE(lhs_sample(50, box(), 3), lhs_sample(50, box(), 4));
}

TEST(Lhs, ColumnsAreNotSorted) {
  const auto s = lhs_sample(200, box(), 5);
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    std::vector<double> c(s.col(j).data(), s.col(j).data() + s.rows());
    EXPECT_FALSE(std::is_sorted(c.begin(), c.end()));
  }
}

TEST(Lhs, RejectsEmptyRequests) {
  EXPECT_THROW(lhs_sample(0, box(), 1), std::invalid_argument);
  EXPECT_THROW(lhs_sample(5, Bounds{}, 1), std::invalid_argument);
}

// Evaluator that fails on the upper half of x1 and saturates only M1.
EvaluationResult half_failing(const DesignVector& x) {
  if (x[0] > 0.5) return EvaluationResult::failed(FailureKind::Unrealizable, "upper half");
  EvaluationResult r;
  r.metrics["f"] = x[0] * x[0] + x[1] * x[1];
  r.metrics["s"] = x[0] + x[1];
  return r;
}

ProblemSpec small_problem() {
  auto p = synthetic_problem();
  p.transistors = {"M1"};
  return p;
}

TEST(Database, RowsFollowLhsOrderAndRecordFailures) {
  const auto p = small_problem();
  FunctionEvaluator e([](const DesignVector& x) {
    auto r = half_failing(x);
    if (r.ok()) r.saturation["M1"] = x[1] > 0.25;
    return r;
  });
  const auto d = build_database(p, e, 64, 9, 1);
  ASSERT_EQ(d.size(), 64u);
  EXPECT_EQ(e.call_count(), 64u);
  EXPECT_EQ(d.features, lhs_sample(64, p.bounds, 9));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double x0 = d.features(k, 0), x1 = d.features(k, 1);
    if (x0 > 0.5) {
      EXPECT_EQ(d.failures[i], FailureKind::Unrealizable);
      EXPECT_TRUE(std::isnan(d.targets.at("s")[k]));
      EXPECT_EQ(d.labels.at("M1")[i], 0);
    } else {
      EXPECT_EQ(d.failures[i], FailureKind::None);
      EXPECT_DOUBLE_EQ(d.targets.at("s")[k], x0 + x1);
      EXPECT_EQ(d.labels.at("M1")[i], x1 > 0.25 ? 1 : 0);
    }
  }
}

TEST(Database, WorkerCountDoesNotChangeContent) {
  const auto p = tsmcoa_problem();
  TsmcoaAnalytic e;
  const auto a = build_database(p, e, 40, 2, 1);
  const auto b = build_database(p, e, 40, 2, 4);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(dataset_hash(a), dataset_hash(b));
}

TEST(Database, EvaluatorExceptionCarriesRowIndex) {
  const auto p = synthetic_problem();
  const auto pts = lhs_sample(20, p.bounds, 4);
  const double bad = pts(13, 0);
  FunctionEvaluator e([bad](const DesignVector& x) {
    if (x[0] == bad) throw std::runtime_error("boom");
    return half_failing(x);
  });
  try {
    build_database(p, e, 20, 4, 3);
    FAIL() << "expected DatabaseError";
  } catch (const DatabaseError& err) {
    EXPECT_EQ(err.index(), 13u);
  }
}

TEST(Database, EmptyRequestKeepsColumns) {
  const auto p = small_problem();
  FunctionEvaluator e(half_failing);
  const auto d = build_database(p, e, 0, 1);
  EXPECT_EQ(d.size(), 0u);
  EXPECT_EQ(e.call_count(), 0u);
  EXPECT_TRUE(d.targets.count("s"));
  EXPECT_TRUE(d.labels.count("M1"));
}

TEST(Split, SizesAndDisjointCover) {
  const auto p = synthetic_problem();
  FunctionEvaluator e(half_failing);
  const auto d = build_database(p, e, 101, 6);
  const auto [tr, te] = split(d, 0.8, 1);
  EXPECT_EQ(tr.size(), 80u);
  EXPECT_EQ(te.size(), 21u);
  std::multiset<std::pair<double, double>> all, parts;
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) all.emplace(d.features(i, 0), d.features(i, 1));
  for (const auto* s : {&tr, &te}) {
    for (Eigen::Index i = 0; i < s->features.rows(); ++i) {
      parts.emplace(s->features(i, 0), s->features(i, 1));
    }
  }
  EXPECT_EQ(all, parts);
  EXPECT_THROW(split(d, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(split(d, 0.0, 1), std::invalid_argument);
}

TEST(Split, SubsetKeepsRowsAligned) {
  const auto p = synthetic_problem();
  FunctionEvaluator e(half_failing);
  const auto d = build_database(p, e, 30, 8);
  const auto s = d.subset({29, 0, 5});
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Eigen::Index src = std::array<Eigen::Index, 3>{29, 0, 5}[static_cast<std::size_t>(k)];
    EXPECT_EQ(s.features.row(k), d.features.row(src));
    EXPECT_EQ(s.failures[static_cast<std::size_t>(k)], d.failures[static_cast<std::size_t>(src)]);
  }
}

TEST(DatasetIo, RoundTripPreservesEverything) {
  testing::ScratchDir dir("dataset");
  const auto p = tsmcoa_problem();
  TsmcoaAnalytic e;
  const auto d = build_database(p, e, 50, 12);
  const auto path = dir / "dataset.csv";
  save_dataset(d, path);
  EXPECT_TRUE(std::filesystem::exists(schema_path(path)));
  const auto back = load_dataset(path);
  EXPECT_EQ(back.problem, d.problem);
  EXPECT_EQ(back.seed, d.seed);
  EXPECT_EQ(back.bounds, d.bounds);
  EXPECT_EQ(back.feature_names, d.feature_names);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.failures, d.failures);
  ASSERT_EQ(back.targets.size(), d.targets.size());
  for (const auto& [k, v] : d.targets) {
    const auto& w = back.targets.at(k);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::isnan(v[i])) {
        EXPECT_TRUE(std::isnan(w[i]));
      } else {
        EXPECT_EQ(w[i], v[i]);
      }
    }
  }
  EXPECT_EQ(dataset_hash(back), dataset_hash(d));
}

TEST(DatasetIo, FailedRowsSurviveRoundTrip) {
  testing::ScratchDir dir("dataset-fail");
  const auto p = small_problem();
  FunctionEvaluator e(half_failing);
  const auto d = build_database(p, e, 20, 2);
  save_dataset(d, dir / "d.csv");
  const auto back = load_dataset(dir / "d.csv");
  EXPECT_EQ(back.failures, d.failures);
  EXPECT_EQ(dataset_hash(back), dataset_hash(d));
}

TEST(DatasetIo, MissingSchemaThrows) {
  testing::ScratchDir dir("dataset-missing");
  testing::write_file(dir / "d.csv", "x1,x2\n0.1,0.2\n");
  EXPECT_THROW(load_dataset(dir / "d.csv"), std::runtime_error);
}

TEST(DatasetHash, SensitiveToContent) {
  const auto p = synthetic_problem();
  FunctionEvaluator e(half_failing);
  auto d = build_database(p, e, 10, 1);
  const auto h = dataset_hash(d);
  d.features(3, 1) = std::nextafter(d.features(3, 1), 2.0);
  EXPECT_NE(dataset_hash(d), h);
}

}  // namespace
}  // namespace sizer
