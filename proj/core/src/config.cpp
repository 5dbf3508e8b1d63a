#include "sizer/config.hpp"

#include <fstream>
#include <set>

#include "sizer/analytic.hpp"
#include "sizer/problem_io.hpp"
#include "sizer/problems.hpp"

namespace sizer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one JSON object, reporting errors by dotted field path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return as<T>(key);
  }

  template <typename T>
  T require(const std::string& key) const {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key), "missing required field");
    return as<T>(key);
  }

  Reader child(const std::string& key) const {
    seen_.insert(key);
    static const json empty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  void mark(const std::string& key) const { seen_.insert(key); }

  void reject_unknown() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown field");
    }
  }

 private:
  template <typename T>
  T as(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), std::string("wrong type (") + e.what() + ")");
    }
  }

  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

ProblemSpec parse_problem(const Reader& root, const fs::path& base) {
  root.mark("problem");
  if (!root.has("problem")) throw ConfigError("problem", "missing required field");
  const json& pj = root.raw("problem");
  try {
    if (pj.is_string()) return builtin_problem(pj.get<std::string>());
    Reader r(pj, "problem");
    ProblemSpec p;
    if (r.has("file")) {
      p = load_problem(resolve(base, r.require<std::string>("file")));
    } else if (r.has("spec")) {
      r.mark("spec");
      p = r.raw("spec").get<ProblemSpec>();
    } else {
      throw ConfigError("problem", "expected a built-in name, {\"file\": ...} or {\"spec\": ...}");
    }
    r.reject_unknown();
    p.validate();
    return p;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("problem", e.what());
  }
}

}  // namespace

bool ExperimentConfig::needs_models() const {
  for (auto m : modes) {
    if (uses_classifiers(m)) return true;
  }
  return false;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("runs", "must be at least 1");
  if (modes.empty()) throw ConfigError("modes", "must name at least one mode");
  std::set<GateMode> uniq(modes.begin(), modes.end());
  if (uniq.size() != modes.size()) throw ConfigError("modes", "lists a mode twice");
  try {
    ga.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("ga", e.what());
  }
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("database.train_fraction", "must lie in (0, 1)");
  }
  if (needs_models()) {
    const bool bundle_exists = !bundle_path.empty() && fs::exists(bundle_path / "manifest.json");
    if (!bundle_exists && !train_if_missing) {
      throw ConfigError("bundle.path", "ML modes need an existing bundle or train_if_missing");
    }
    if (!bundle_exists && database_n < 10) {
      throw ConfigError("database.n", "ML modes need a database of at least 10 points");
    }
    try {
      training.validate(problem);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("training", e.what());
    }
  }
  if (evaluator == EvaluatorKind::External) {
    try {
      external.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("evaluator", e.what());
    }
    if (!fs::exists(external.netlist_template)) {
      throw ConfigError("evaluator.netlist_template",
                        "file not found: " + external.netlist_template.string());
    }
  } else if (problem.evaluator.empty()) {
    throw ConfigError("evaluator", "problem '" + problem.name + "' has no built-in analytic evaluator");
  }
}

ExperimentConfig parse_config(const json& j, const fs::path& base) {
  Reader root(j, "");
  ExperimentConfig c;
  c.problem = parse_problem(root, base);

  {
    const Reader ev = root.child("evaluator");
    const auto kind = ev.get<std::string>("kind", "analytic");
    if (kind == "analytic") {
      c.evaluator = EvaluatorKind::Analytic;
    } else if (kind == "external") {
      c.evaluator = EvaluatorKind::External;
      c.external.command = ev.require<std::string>("command");
      c.external.netlist_template = resolve(base, ev.require<std::string>("netlist_template"));
      c.external.working_directory = resolve(base, ev.get<std::string>("working_directory", ""));
      c.external.timeout_seconds = ev.get<double>("timeout_seconds", c.external.timeout_seconds);
      c.external.metric_file = ev.get<std::string>("metric_file", c.external.metric_file);
    } else {
      throw ConfigError("evaluator.kind", "expected \"analytic\" or \"external\"");
    }
    ev.reject_unknown();
  }

  const auto modes = root.require<std::vector<std::string>>("modes");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    try {
      c.modes.push_back(gate_mode_from_string(modes[i]));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("modes[" + std::to_string(i) + "]", e.what());
    }
  }
  c.runs = root.get<std::size_t>("runs", c.runs);

  {
    const Reader ga = root.child("ga");
    c.ga.population = ga.get<std::size_t>("population", c.ga.population);
    c.ga.gen_max = ga.get<std::size_t>("gen_max", c.ga.gen_max);
    c.ga.alpha_start = ga.get<double>("alpha_start", c.ga.alpha_start);
    c.ga.alpha_end = ga.get<double>("alpha_end", c.ga.alpha_end);
    c.ga.retry_budget = ga.get<std::size_t>("retry_budget", c.ga.retry_budget);
    c.ga.surrogate_retry_budget = ga.get<std::size_t>("surrogate_retry_budget", c.ga.surrogate_retry_budget);
    ga.reject_unknown();
    if (c.ga.population < 2) throw ConfigError("ga.population", "must be at least 2");
    if (c.ga.gen_max < 1) throw ConfigError("ga.gen_max", "must be at least 1");
    if (c.ga.retry_budget < 1) throw ConfigError("ga.retry_budget", "must be at least 1");
    if (c.ga.surrogate_retry_budget < 1) {
      throw ConfigError("ga.surrogate_retry_budget", "must be at least 1");
    }
  }
  {
    const Reader db = root.child("database");
    c.database_n = db.get<std::size_t>("n", c.database_n);
    c.train_fraction = db.get<double>("train_fraction", c.train_fraction);
    db.reject_unknown();
  }
  root.mark("training");
  if (root.has("training")) {
    try {
      c.training = root.raw("training").get<TrainingSpec>();
    } catch (const std::exception& e) {
      throw ConfigError("training", e.what());
    }
  }
  {
    const Reader b = root.child("bundle");
    c.bundle_path = resolve(base, b.get<std::string>("path", ""));
    c.train_if_missing = b.get<bool>("train_if_missing", c.train_if_missing);
    b.reject_unknown();
  }
  c.output = resolve(base, root.get<std::string>("output", "out"));
  c.seed = root.get<std::uint64_t>("seed", c.seed);
  c.workers = root.get<std::size_t>("workers", c.workers);
  c.parallel_runs = root.get<bool>("parallel_runs", c.parallel_runs);
  c.paired_seeds = root.get<bool>("paired_seeds", c.paired_seeds);
  root.reject_unknown();

  c.ga.seed = c.seed;
  c.ga.workers = c.workers;
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

std::shared_ptr<const Evaluator> make_evaluator(const ExperimentConfig& cfg) {
  if (cfg.evaluator == EvaluatorKind::External) {
    std::vector<std::string> names;
    for (const auto& v : cfg.problem.variables) names.push_back(v.name);
    return std::make_shared<ExternalEvaluator>(cfg.external, std::move(names));
  }
  return builtin_evaluator(cfg.problem.evaluator);
}

}  // namespace sizer
