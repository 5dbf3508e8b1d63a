#include "sizer/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sizer/device_constants.hpp"
#include "sizer/parallel.hpp"
#include "sizer/problem_io.hpp"
#include "sizer/rng.hpp"

namespace sizer {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::MatrixXd lhs_sample(std::size_t n, const Bounds& bounds, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("lhs_sample: n must be at least 1");
  const std::size_t d = bounds.dim();
  if (d == 0) throw std::invalid_argument("lhs_sample: empty bounds");
  for (std::size_t j = 0; j < d; ++j) {
    if (!(bounds.lower(j) < bounds.upper(j)) || !std::isfinite(bounds.width(j))) {
      throw std::invalid_argument("lhs_sample: invalid bounds in dimension " + std::to_string(j));
    }
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd out(n, d);
  std::vector<std::size_t> perm(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const double lo = bounds.lower(j), hi = bounds.upper(j), w = bounds.width(j);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = perm[i];
      double v = std::min(lo + w * (static_cast<double>(k) + u(rng)) * inv_n, hi);
      // Rounding can land a point just across a stratum edge.
      auto stratum = [&](double y) {
        return std::min(n - 1, static_cast<std::size_t>((y - lo) / w * static_cast<double>(n)));
      };
      while (v > lo && stratum(v) > k) v = std::nextafter(v, lo);
      while (v < hi && stratum(v) < k) v = std::nextafter(v, hi);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
  Dataset out;
  out.problem = problem;
  out.seed = seed;
  out.bounds = bounds;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(idx[r]));
  }
  for (const auto& [k, v] : targets) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) t[static_cast<Eigen::Index>(r)] = v[static_cast<Eigen::Index>(idx[r])];
    out.targets.emplace(k, std::move(t));
  }
  for (const auto& [k, v] : labels) {
    std::vector<std::uint8_t> l(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) l[r] = v[idx[r]];
    out.labels.emplace(k, std::move(l));
  }
  out.failures.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out.failures[r] = failures[idx[r]];
  return out;
}

void Dataset::validate() const {
  const auto n = features.rows();
  if (!features.allFinite()) throw std::invalid_argument("dataset has non-finite features");
  if (feature_names.size() != static_cast<std::size_t>(features.cols())) {
    throw std::invalid_argument("dataset feature names do not match the feature count");
  }
  for (const auto& [k, v] : targets) {
    if (v.size() != n) throw std::invalid_argument("target column " + k + " has the wrong length");
  }
  for (const auto& [k, v] : labels) {
    if (static_cast<Eigen::Index>(v.size()) != n) {
      throw std::invalid_argument("label column " + k + " has the wrong length");
    }
  }
  if (static_cast<Eigen::Index>(failures.size()) != n) {
    throw std::invalid_argument("failure column has the wrong length");
  }
}

std::vector<std::string> recorded_metrics(const ProblemSpec& p) {
  std::vector<std::string> keys;
  for (const auto& c : p.constraints) keys.push_back(c.key());
  if (const auto* m = std::get_if<MetricObjective>(&p.objective)) keys.push_back(m->key);
  if (const auto* w = std::get_if<WeightedObjective>(&p.objective)) keys.push_back(w->power_metric);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

Dataset build_database(const ProblemSpec& p, const Evaluator& e, std::size_t n,
                       std::uint64_t seed, std::size_t workers) {
  Dataset d;
  d.problem = p.name;
  d.seed = seed;
  d.bounds = p.bounds;
  for (const auto& v : p.variables) d.feature_names.push_back(v.name);
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p.dim()));
  const auto metric_keys = recorded_metrics(p);
  const auto sat_keys = p.saturation_keys();
  for (const auto& k : metric_keys) {
    d.targets.emplace(k, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                   std::numeric_limits<double>::quiet_NaN()));
  }
  for (const auto& k : sat_keys) d.labels.emplace(k, std::vector<std::uint8_t>(n, 0));
  d.failures.assign(n, FailureKind::None);
  if (n == 0) return d;

  d.features = lhs_sample(n, p.bounds, seed);
  std::vector<EvaluationResult> results(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const Eigen::RowVectorXd row = d.features.row(static_cast<Eigen::Index>(i));
    DesignVector x(std::vector<double>(row.data(), row.data() + row.size()));
    try {
      results[i] = e.evaluate(x);
    } catch (const std::exception& ex) {
      throw DatabaseError(i, ex.what());
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = results[i];
    d.failures[i] = r.failure;
    if (!r.ok()) continue;
    for (const auto& k : metric_keys) {
      const auto v = r.metric(k);
      if (v && std::isfinite(*v)) d.targets[k][static_cast<Eigen::Index>(i)] = *v;
    }
    for (const auto& k : sat_keys) {
      const auto s = r.saturated(k);
      d.labels[k][i] = s.value_or(false) ? 1 : 0;
    }
  }
  return d;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(d.size()) * train_fraction));
  std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> te(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {d.subset(tr), d.subset(te)};
}

std::uint64_t dataset_hash(const Dataset& d) {
  std::uint64_t h = fnv1a(d.problem);
  auto mix_bytes = [&h](const void* p, std::size_t len) {
    h = fnv1a(std::string_view(static_cast<const char*>(p), len), h);
  };
  auto mix_double = [&](double v) {
    if (std::isnan(v)) v = std::numeric_limits<double>::quiet_NaN();  // canonical NaN
    mix_bytes(&v, sizeof v);
  };
  const std::uint64_t dims[2] = {d.size(), d.dim()};
  mix_bytes(dims, sizeof dims);
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.features.cols(); ++j) mix_double(d.features(i, j));
  }
  for (const auto& [k, v] : d.targets) {
    h = fnv1a(k, h);
    for (Eigen::Index i = 0; i < v.size(); ++i) mix_double(v[i]);
  }
  for (const auto& [k, v] : d.labels) {
    h = fnv1a(k, h);
    mix_bytes(v.data(), v.size());
  }
  return h;
}

fs::path schema_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".schema.json");
  return p;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FailureKind failure_from_string(std::string_view s) {
  for (auto k : {FailureKind::None, FailureKind::Unrealizable, FailureKind::MissingBinary,
                 FailureKind::Timeout, FailureKind::MalformedOutput, FailureKind::ProcessError}) {
    if (to_string(k) == s) return k;
  }
  throw std::runtime_error("unknown failure kind '" + std::string(s) + "'");
}

}  // namespace

void save_dataset(const Dataset& d, const fs::path& csv_path) {
  d.validate();
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());

  json columns = json::array();
  std::vector<std::string> header;
  for (const auto& f : d.feature_names) {
    header.push_back(f);
    columns.push_back({{"name", f}, {"kind", "feature"}});
  }
  for (const auto& [k, _] : d.targets) {
    header.push_back("metric:" + k);
    columns.push_back({{"name", header.back()}, {"kind", "metric"}, {"key", k}});
  }
  for (const auto& [k, _] : d.labels) {
    header.push_back("sat:" + k);
    columns.push_back({{"name", header.back()}, {"kind", "label"}, {"key", k}});
  }
  header.push_back("failure");
  columns.push_back({{"name", "failure"}, {"kind", "failure"}});

  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < d.features.cols(); ++j) out << (j ? "," : "") << fmt(d.features(r, j));
    for (const auto& [_, v] : d.targets) out << ',' << fmt(v[r]);
    for (const auto& [_, v] : d.labels) out << ',' << static_cast<int>(v[i]);
    out << ',' << to_string(d.failures[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + csv_path.string());

  const json schema = {{"problem", d.problem},
                       {"n", d.size()},
                       {"seed", d.seed},
                       {"bounds", d.bounds},
                       {"model_version", constants::kAnalyticModelVersion},
                       {"columns", columns}};
  std::ofstream sj(schema_path(csv_path));
  sj << schema.dump(2) << '\n';
  if (!sj) throw std::runtime_error("cannot write " + schema_path(csv_path).string());
}

Dataset load_dataset(const fs::path& csv_path) {
  std::ifstream sj(schema_path(csv_path));
  if (!sj) throw std::runtime_error("missing schema " + schema_path(csv_path).string());
  json schema;
  try {
    schema = json::parse(sj);
  } catch (const json::exception& e) {
    throw std::runtime_error("bad schema " + schema_path(csv_path).string() + ": " + e.what());
  }

  Dataset d;
  d.problem = schema.at("problem").get<std::string>();
  d.seed = schema.at("seed").get<std::uint64_t>();
  d.bounds = schema.at("bounds").get<Bounds>();
  const auto n = schema.at("n").get<std::size_t>();

  struct Col {
    std::string kind, key;
  };
  std::vector<Col> cols;
  for (const auto& c : schema.at("columns")) {
    Col col{c.at("kind").get<std::string>(), c.value("key", std::string{})};
    if (col.kind == "feature") d.feature_names.push_back(c.at("name").get<std::string>());
    cols.push_back(std::move(col));
  }
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.feature_names.size()));
  for (const auto& c : cols) {
    if (c.kind == "metric") d.targets.emplace(c.key, Eigen::VectorXd(static_cast<Eigen::Index>(n)));
    if (c.kind == "label") d.labels.emplace(c.key, std::vector<std::uint8_t>(n));
  }
  d.failures.resize(n);

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read " + csv_path.string());
  std::string line;
  std::getline(in, line);  // header
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      throw std::runtime_error(csv_path.string() + ": expected " + std::to_string(n) + " rows");
    }
    std::stringstream ss(line);
    std::string cell;
    std::size_t feature = 0;
    const auto r = static_cast<Eigen::Index>(i);
    for (const auto& c : cols) {
      if (!std::getline(ss, cell, ',')) {
        throw std::runtime_error(csv_path.string() + ": short row " + std::to_string(i + 2));
      }
      if (c.kind == "feature") {
        d.features(r, static_cast<Eigen::Index>(feature++)) = std::strtod(cell.c_str(), nullptr);
      } else if (c.kind == "metric") {
        d.targets[c.key][r] = std::strtod(cell.c_str(), nullptr);
      } else if (c.kind == "label") {
        d.labels[c.key][i] = cell == "1" ? 1 : 0;
      } else {
        d.failures[i] = failure_from_string(cell);
      }
    }
  }
  d.validate();
  return d;
}

}  // namespace sizer
