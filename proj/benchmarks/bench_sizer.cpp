#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "sizer/analytic.hpp"
#include "sizer/bundle.hpp"
#include "sizer/forest.hpp"
#include "sizer/mlp.hpp"
#include "sizer/optimizer.hpp"
#include "sizer/problems.hpp"
#include "sizer/sampling.hpp"

namespace {

using namespace sizer;

DesignVector midpoint(const ProblemSpec& p) {
  std::vector<double> v;
  for (std::size_t i = 0; i < p.dim(); ++i) v.push_back(0.5 * (p.bounds.lower(i) + p.bounds.upper(i)));
  return DesignVector(v);
}

// Untrained networks of the default shape: prediction cost does not depend
// on the weights.
SurrogateBundle random_bundle(const ProblemSpec& p, std::vector<int> hidden) {
  SurrogateBundle b;
  b.scaler = Scaler(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dim())),
                    Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p.dim())));
  MlpSpec c{.hidden = hidden, .task = MlpTask::Classifier};
  std::uint64_t seed = 0;
  for (const auto& key : p.saturation_keys()) {
    b.classifiers.emplace_back(key, MlpModel(c, static_cast<int>(p.dim()), ++seed));
  }
  MlpSpec r{.hidden = hidden, .task = MlpTask::Regressor};
  for (const auto& con : p.constraints) {
    b.regressors.emplace_back(con.key(), MlpModel(r, static_cast<int>(p.dim()), ++seed));
  }
  return b;
}

void BM_MlpPredictOne(benchmark::State& state) {
  MlpSpec s{.hidden = {128, 64, 16}};
  const MlpModel m(s, 6, 1);
  std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  for (auto _ : state) benchmark::DoNotOptimize(m.predict_one(x));
}
BENCHMARK(BM_MlpPredictOne);

void BM_MlpPredictBatch(benchmark::State& state) {
  MlpSpec s{.hidden = {128, 64, 16}};
  const MlpModel m(s, 6, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpPredictBatch)->Arg(64)->Arg(1024);

void BM_ForestPredictOne(benchmark::State& state) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2000, 6);
  const Eigen::VectorXd y = x.rowwise().squaredNorm();
  ForestSpec s;
  s.n_estimators = static_cast<int>(state.range(0));
  const auto f = fit_rf(s, x, y);
  std::vector<double> probe{0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  for (auto _ : state) benchmark::DoNotOptimize(f.predict_one(probe));
}
BENCHMARK(BM_ForestPredictOne)->Arg(100);

void BM_TsmcoaEvaluate(benchmark::State& state) {
  const auto p = tsmcoa_problem();
  const TsmcoaAnalytic e;
  const auto x = midpoint(p);
  for (auto _ : state) benchmark::DoNotOptimize(e.evaluate(x));
}
BENCHMARK(BM_TsmcoaEvaluate);

void BM_GateCheck(benchmark::State& state) {
  const auto p = tsmcoa_problem();
  const TsmcoaAnalytic e;
  const auto bundle = random_bundle(p, {128, 64, 16});
  const auto mode = static_cast<GateMode>(state.range(0));
  const Gate gate(p, mode, &bundle, e);
  const auto x = midpoint(p);
  for (auto _ : state) benchmark::DoNotOptimize(gate.check(x));
}
BENCHMARK(BM_GateCheck)
    ->Arg(static_cast<int>(GateMode::MGA))
    ->Arg(static_cast<int>(GateMode::MGA_MLSP))
    ->Arg(static_cast<int>(GateMode::MGA_MLSCP));

void BM_LhsSample(benchmark::State& state) {
  const auto p = tsmcoa_problem();
  for (auto _ : state) benchmark::DoNotOptimize(lhs_sample(static_cast<std::size_t>(state.range(0)), p.bounds, 1));
}
BENCHMARK(BM_LhsSample)->Arg(20000);

}  // namespace
BENCHMARK_MAIN();
