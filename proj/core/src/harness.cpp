#include "sizer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sizer/parallel.hpp"
#include "sizer/rng.hpp"
#include "sizer/sampling.hpp"
#include "sizer/trace_io.hpp"

namespace sizer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t master, GateMode mode, std::size_t run, bool paired) {
  if (paired) return derive_seed(derive_seed(master, "run"), run);
  return derive_seed(derive_seed(master, to_string(mode)), run);
}

ModeSummary summarize(GateMode mode, const std::vector<RunTrace>& runs) {
  ModeSummary s;
  s.mode = mode;
  s.runs = runs.size();
  std::vector<double> finite, calls;
  for (const auto& t : runs) {
    const double f = t.best_fitness();
    s.fitness.push_back(f);
    s.calls.push_back(t.total_calls());
    calls.push_back(static_cast<double>(t.total_calls()));
    if (std::isfinite(f)) finite.push_back(f);
  }
  s.feasible_runs = finite.size();
  if (!calls.empty()) {
    s.mean_calls = std::accumulate(calls.begin(), calls.end(), 0.0) / static_cast<double>(calls.size());
    s.median_calls = median(calls);
  }
  if (finite.empty()) {
    s.best = s.worst = s.mean = s.sd = kNaN;
    return s;
  }
  s.best = *std::min_element(finite.begin(), finite.end());
  s.worst = *std::max_element(finite.begin(), finite.end());
  s.mean = std::accumulate(finite.begin(), finite.end(), 0.0) / static_cast<double>(finite.size());
  double ss = 0.0;
  for (double f : finite) ss += (f - s.mean) * (f - s.mean);
  s.sd = finite.size() > 1 ? std::sqrt(ss / static_cast<double>(finite.size() - 1)) : 0.0;
  return s;
}

const ModeSummary* SummaryTable::find(GateMode m) const {
  for (const auto& r : rows) {
    if (r.mode == m) return &r;
  }
  return nullptr;
}

std::optional<double> SummaryTable::reduction(GateMode base, GateMode other, bool use_median) const {
  const auto* b = find(base);
  const auto* o = find(other);
  if (!b || !o) return std::nullopt;
  const double cb = use_median ? b->median_calls : b->mean_calls;
  const double co = use_median ? o->median_calls : o->mean_calls;
  if (!(cb > 0.0)) return std::nullopt;
  return (cb - co) / cb;
}

json SummaryTable::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    json fit = json::array();
    for (double f : r.fitness) fit.push_back(num(f));
    rows_j.push_back({{"mode", to_string(r.mode)},
                      {"runs", r.runs},
                      {"feasible_runs", r.feasible_runs},
                      {"best", num(r.best)},
                      {"worst", num(r.worst)},
                      {"mean", num(r.mean)},
                      {"sd", num(r.sd)},
                      {"mean_calls", r.mean_calls},
                      {"median_calls", r.median_calls},
                      {"fitness", fit},
                      {"calls", r.calls}});
  }
  json red = json::array();
  for (GateMode base : {GateMode::SGA, GateMode::MGA}) {
    for (const auto& r : rows) {
      if (r.mode == base || (base == GateMode::MGA && !uses_classifiers(r.mode))) continue;
      const auto mean = reduction(base, r.mode, false);
      if (!mean) continue;
      red.push_back({{"baseline", to_string(base)},
                     {"mode", to_string(r.mode)},
                     {"mean", *mean},
                     {"median", num(reduction(base, r.mode, true).value_or(kNaN))}});
    }
  }
  return {{"modes", rows_j}, {"reductions", red}};
}

std::string SummaryTable::to_csv() const {
  std::ostringstream out;
  out << "mode,runs,feasible_runs,best,worst,mean,sd,mean_calls,median_calls\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << r.runs << ',' << r.feasible_runs << ',' << fmt(r.best) << ','
        << fmt(r.worst) << ',' << fmt(r.mean) << ',' << fmt(r.sd) << ',' << fmt(r.mean_calls) << ','
        << fmt(r.median_calls) << '\n';
  }
  return out.str();
}

TrainingOutcome train_models(const ExperimentConfig& cfg, const Evaluator& e) {
  CountedEvaluator counter(std::shared_ptr<const Evaluator>(std::shared_ptr<void>(), &e));
  spdlog::info("building database: {} points of {}", cfg.database_n, cfg.problem.name);
  const Dataset ds =
      build_database(cfg.problem, counter, cfg.database_n, derive_seed(cfg.seed, "database"), cfg.workers);
  save_dataset(ds, cfg.output / "dataset.csv");
  auto [train, test] = split(ds, cfg.train_fraction, derive_seed(cfg.seed, "split"));
  spdlog::info("training surrogates on {} rows, testing on {}", train.size(), test.size());
  SurrogateBundle b = train_bundle(train, test, cfg.training, derive_seed(cfg.seed, "train"), cfg.workers);
  b.provenance.dataset_hash = dataset_hash(ds);
  if (!cfg.bundle_path.empty()) save_bundle(b, cfg.bundle_path);
  TrainingOutcome out;
  out.bundle = std::make_shared<const SurrogateBundle>(std::move(b));
  out.database_calls = counter.call_count();
  return out;
}

TrainingOutcome obtain_models(const ExperimentConfig& cfg, const Evaluator& e) {
  if (!cfg.bundle_path.empty() && fs::exists(cfg.bundle_path / "manifest.json")) {
    auto b = load_bundle(cfg.bundle_path);
    b.check_against(cfg.problem);
    const fs::path dataset = cfg.output / "dataset.csv";
    if (fs::exists(dataset) && fs::exists(schema_path(dataset))) {
      provenance_mismatch(b, dataset_hash(load_dataset(dataset)));
    }
    TrainingOutcome out;
    out.bundle = std::make_shared<const SurrogateBundle>(std::move(b));
    out.loaded = true;
    return out;
  }
  if (!cfg.train_if_missing) throw std::runtime_error("no bundle at " + cfg.bundle_path.string());
  return train_models(cfg, e);
}

namespace {

json bundle_metrics(const SurrogateBundle& b) {
  json out = json::array();
  for (const auto& r : b.report) {
    json j = {{"key", r.key}, {"kind", r.kind}, {"model", r.model}};
    if (r.accuracy) j["accuracy"] = *r.accuracy;
    if (r.r2) j["r2"] = num(*r.r2);
    if (r.mae) j["mae"] = num(*r.mae);
    out.push_back(j);
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto evaluator = make_evaluator(cfg);
  ExperimentResult res;
  TrainingOutcome models;
  if (cfg.needs_models()) {
    models = obtain_models(cfg, *evaluator);
    res.database_calls = models.database_calls;
    res.bundle_loaded = models.loaded;
  }

  std::vector<LabeledTrace> labeled;
  json per_run = json::object();
  for (GateMode mode : cfg.modes) {
    std::vector<RunTrace> traces(cfg.runs);
    const FeasibilityPredictor* pred = uses_classifiers(mode) ? models.bundle.get() : nullptr;
    auto one = [&](std::size_t r, std::size_t workers) {
      GaConfig g = cfg.ga;
      g.mode = mode;
      g.seed = run_seed(cfg.seed, mode, r, cfg.paired_seeds);
      g.workers = workers;
      traces[r] = run(cfg.problem, *evaluator, g, pred);
      spdlog::info("{} run {}: best {} after {} calls", to_string(mode), r,
                   traces[r].best_fitness(), traces[r].total_calls());
    };
    if (cfg.parallel_runs) {
      parallel_for(cfg.runs, cfg.workers, [&](std::size_t r) { one(r, 1); });
    } else {
      for (std::size_t r = 0; r < cfg.runs; ++r) one(r, cfg.workers);
    }
    json runs_j = json::array();
    for (std::size_t r = 0; r < cfg.runs; ++r) {
      const std::string name = std::string(to_string(mode)) + "_" + std::to_string(r);
      write_trace_csv(traces[r], cfg.output / "traces" / (name + ".csv"));
      labeled.push_back({std::string(to_string(mode)), traces[r].generations});
      runs_j.push_back(trace_summary(traces[r]));
    }
    per_run[std::string(to_string(mode))] = runs_j;
    res.summary.rows.push_back(summarize(mode, traces));
    res.traces.push_back(std::move(traces));
  }

  json j = res.summary.to_json();
  j["problem"] = cfg.problem.name;
  j["seed"] = cfg.seed;
  j["runs"] = cfg.runs;
  j["paired_seeds"] = cfg.paired_seeds;
  j["database_calls"] = res.database_calls;
  j["runs_detail"] = per_run;
  if (models.bundle) {
    j["bundle"] = {{"loaded", models.loaded}, {"models", bundle_metrics(*models.bundle)}};
  }
  res.summary_json = j;
  write_text(cfg.output / "summary.json", j.dump(2) + "\n");
  write_text(cfg.output / "summary.csv", res.summary.to_csv());
  write_text(cfg.output / "convergence.csv", average_convergence(labeled).to_csv());
  return res;
}

std::string ConvergenceTable::to_csv() const {
  std::ostringstream out;
  out << "calls";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < calls.size(); ++i) {
    out << fmt(calls[i]);
    for (const auto& s : values) out << ',' << fmt(s[i]);
    out << '\n';
  }
  return out.str();
}

namespace {

double value_at(const std::vector<GenerationRecord>& recs, double calls) {
  double v = kInf;
  for (const auto& r : recs) {
    if (static_cast<double>(r.cum_calls) > calls) break;
    v = r.best_fitness;
  }
  return v;
}

std::vector<double> call_grid(const std::vector<LabeledTrace>& traces, std::size_t points) {
  if (points < 2) throw std::invalid_argument("convergence grid needs at least two points");
  double max_calls = 0.0;
  for (const auto& t : traces) {
    if (!t.records.empty()) max_calls = std::max(max_calls, static_cast<double>(t.records.back().cum_calls));
  }
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = max_calls * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

}  // namespace

ConvergenceTable report_convergence(const std::vector<LabeledTrace>& traces, std::size_t grid_points) {
  if (traces.empty()) throw std::invalid_argument("report_convergence: no traces");
  ConvergenceTable t;
  if (traces.size() == 1) {
    t.labels = {traces[0].label};
    t.values.emplace_back();
    for (const auto& r : traces[0].records) {
      t.calls.push_back(static_cast<double>(r.cum_calls));
      t.values[0].push_back(r.best_fitness);
    }
    return t;
  }
  t.calls = call_grid(traces, grid_points);
  for (const auto& tr : traces) {
    t.labels.push_back(tr.label);
    std::vector<double> s;
    for (double c : t.calls) s.push_back(value_at(tr.records, c));
    t.values.push_back(std::move(s));
  }
  return t;
}

ConvergenceTable average_convergence(const std::vector<LabeledTrace>& traces, std::size_t grid_points) {
  if (traces.empty()) throw std::invalid_argument("average_convergence: no traces");
  ConvergenceTable t;
  t.calls = call_grid(traces, grid_points);
  for (const auto& tr : traces) {
    if (std::find(t.labels.begin(), t.labels.end(), tr.label) == t.labels.end()) t.labels.push_back(tr.label);
  }
  for (const auto& label : t.labels) {
    std::vector<double> s;
    for (double c : t.calls) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& tr : traces) {
        if (tr.label != label) continue;
        const double v = value_at(tr.records, c);
        if (std::isfinite(v)) {
          sum += v;
          ++n;
        }
      }
      s.push_back(n ? sum / static_cast<double>(n) : kInf);
    }
    t.values.push_back(std::move(s));
  }
  return t;
}

}  // namespace sizer
