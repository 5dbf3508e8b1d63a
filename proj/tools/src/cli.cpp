#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "sizer/harness.hpp"
#include "sizer/rng.hpp"
#include "sizer/sampling.hpp"
#include "sizer/trace_io.hpp"

namespace sizer::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
};

// Thrown for bad command-line combinations; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw UsageError("--config is required for this command");
  ExperimentConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = cfg.ga.seed = *g.seed;
  if (g.workers) cfg.workers = cfg.ga.workers = *g.workers;
  if (!g.out.empty()) cfg.output = g.out;
  cfg.validate();
  return cfg;
}

std::string num(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_models(const SurrogateBundle& b) {
  std::printf("%-24s %-10s %-20s %9s %9s %12s\n", "model", "kind", "family", "accuracy", "r2", "mae");
  for (const auto& r : b.report) {
    std::printf("%-24s %-10s %-20s %9s %9s %12s\n", r.key.c_str(), r.kind.c_str(), r.model.c_str(),
                r.accuracy ? num(*r.accuracy).c_str() : "-", r.r2 ? num(*r.r2).c_str() : "-",
                r.mae ? num(*r.mae).c_str() : "-");
  }
}

void print_summary(const ExperimentResult& res) {
  std::printf("%-10s %5s %9s %12s %12s %12s %12s %12s %12s\n", "mode", "runs", "feasible", "best",
              "worst", "mean", "sd", "mean_calls", "median_calls");
  for (const auto& r : res.summary.rows) {
    std::printf("%-10s %5zu %9zu %12s %12s %12s %12s %12s %12s\n", std::string(to_string(r.mode)).c_str(),
                r.runs, r.feasible_runs, num(r.best).c_str(), num(r.worst).c_str(), num(r.mean).c_str(),
                num(r.sd).c_str(), num(r.mean_calls).c_str(), num(r.median_calls).c_str());
  }
  for (const auto& red : res.summary_json.at("reductions")) {
    const auto& med = red.at("median");
    std::printf("call reduction %s vs %s: mean %.1f%%, median %.1f%%\n",
                red.at("mode").get<std::string>().c_str(), red.at("baseline").get<std::string>().c_str(),
                100.0 * red.at("mean").get<double>(), med.is_null() ? NAN : 100.0 * med.get<double>());
  }
  if (res.database_calls > 0) {
    std::printf("database evaluator calls: %llu\n", static_cast<unsigned long long>(res.database_calls));
  }
}

int cmd_sample(const Globals& g, std::optional<std::size_t> n) {
  ExperimentConfig cfg = load(g);
  if (n) cfg.database_n = *n;
  const auto e = make_evaluator(cfg);
  const Dataset ds = build_database(cfg.problem, *e, cfg.database_n, derive_seed(cfg.seed, "database"),
                                    cfg.workers);
  const fs::path path = cfg.output / "dataset.csv";
  save_dataset(ds, path);
  std::size_t failed = 0;
  for (auto f : ds.failures) failed += f != FailureKind::None;
  std::printf("wrote %zu rows (%zu failed) to %s\n", ds.size(), failed, path.string().c_str());
  return 0;
}

int cmd_train(const Globals& g) {
  ExperimentConfig cfg = load(g);
  if (cfg.bundle_path.empty()) cfg.bundle_path = cfg.output / "bundle";
  const auto e = make_evaluator(cfg);
  const TrainingOutcome t = train_models(cfg, *e);
  print_models(*t.bundle);
  std::printf("database evaluator calls: %llu\nbundle written to %s\n",
              static_cast<unsigned long long>(t.database_calls), cfg.bundle_path.string().c_str());
  return 0;
}

int cmd_optimize(const Globals& g, const std::string& mode_name, std::size_t run_index) {
  ExperimentConfig cfg = load(g);
  GateMode mode = cfg.modes.front();
  if (!mode_name.empty()) {
    try {
      mode = gate_mode_from_string(mode_name);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--mode: ") + e.what());
    }
  }
  const auto e = make_evaluator(cfg);
  TrainingOutcome models;
  if (uses_classifiers(mode)) models = obtain_models(cfg, *e);
  GaConfig ga = cfg.ga;
  ga.mode = mode;
  ga.seed = run_seed(cfg.seed, mode, run_index, cfg.paired_seeds);
  const RunTrace t = run(cfg.problem, *e, ga, models.bundle.get());
  const std::string name = std::string(to_string(mode)) + "_" + std::to_string(run_index);
  write_trace_csv(t, cfg.output / "traces" / (name + ".csv"));
  const auto summary = trace_summary(t);
  std::ofstream(cfg.output / (name + ".json")) << summary.dump(2) << '\n';
  std::printf("%s\n", summary.dump(2).c_str());
  return 0;
}

int cmd_compare(const Globals& g) {
  const ExperimentResult res = run_experiment(load(g));
  print_summary(res);
  return 0;
}

int cmd_report(const Globals& g, std::string traces_dir, std::string output, std::size_t points) {
  if (traces_dir.empty()) {
    if (!g.out.empty()) {
      traces_dir = (fs::path(g.out) / "traces").string();
    } else if (!g.config.empty()) {
      traces_dir = (load(g).output / "traces").string();
    } else {
      throw UsageError("report needs --traces, --out or --config");
    }
  }
  if (!fs::is_directory(traces_dir)) throw std::runtime_error("no trace directory " + traces_dir);
  static const std::regex name_re(R"(([A-Za-z_]+?)_(\d+)\.csv)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(traces_dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<LabeledTrace> traces;
  for (const auto& f : files) {
    std::smatch m;
    const std::string base = f.filename().string();
    if (!std::regex_match(base, m, name_re)) continue;
    traces.push_back({m[1].str(), read_trace_csv(f)});
  }
  if (traces.empty()) throw std::runtime_error("no <mode>_<run>.csv traces in " + traces_dir);
  const ConvergenceTable table = average_convergence(traces, points);
  if (output.empty()) output = (fs::path(traces_dir).parent_path() / "convergence.csv").string();
  std::ofstream out(output);
  out << table.to_csv();
  if (!out) throw std::runtime_error("cannot write " + output);
  std::printf("%zu traces, %zu series -> %s\n", traces.size(), table.labels.size(), output.c_str());
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Surrogate-gated genetic algorithm for analog circuit sizing"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the master seed");
  app.add_option("--workers", g.workers, "Override the worker thread count")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Override the output directory");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");

  auto* sample = app.add_subcommand("sample", "Build an LHS database with the evaluator");
  std::optional<std::size_t> sample_n;
  sample->add_option("--n", sample_n, "Number of points (default: database.n)");

  auto* train = app.add_subcommand("train", "Build the database and train the surrogate bundle");

  auto* optimize = app.add_subcommand("optimize", "Run one optimization");
  std::string mode;
  std::size_t run_index = 0;
  optimize->add_option("--mode", mode, "SGA, MGA, MGA_MLSP or MGA_MLSCP (default: first configured)");
  optimize->add_option("--run", run_index, "Run index used for seed derivation");

  auto* compare = app.add_subcommand("compare", "Run every configured mode and summarize");

  auto* report = app.add_subcommand("report", "Convergence CSV from trace files");
  std::string traces_dir, report_out;
  std::size_t points = 101;
  report->add_option("--traces", traces_dir, "Directory of <mode>_<run>.csv traces");
  report->add_option("-o,--output", report_out, "Output CSV (default: next to the traces)");
  report->add_option("--points", points, "Grid points")->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*sample) return cmd_sample(g, sample_n);
    if (*train) return cmd_train(g);
    if (*optimize) return cmd_optimize(g, mode, run_index);
    if (*compare) return cmd_compare(g);
    if (*report) return cmd_report(g, traces_dir, report_out, points);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace sizer::cli
