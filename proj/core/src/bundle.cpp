#include "sizer/bundle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "sizer/device_constants.hpp"
#include "sizer/metrics.hpp"
#include "sizer/parallel.hpp"
#include "sizer/rng.hpp"

namespace sizer {

namespace fs = std::filesystem;
using Eigen::Index;
using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "sizer-bundle";
constexpr int kFormatVersion = 1;

double scaled_predict(const MlpModel& m, const Scaler& s, bool log_features, const DesignVector& x) {
  constexpr std::size_t kStack = 64;
  double buf[2 * kStack];
  std::vector<double> heap;
  const std::size_t d = x.dim();
  double* raw = buf;
  if (d > kStack) {
    heap.resize(2 * d);
    raw = heap.data();
  }
  double* z = raw + (d > kStack ? d : kStack);
  for (std::size_t i = 0; i < d; ++i) raw[i] = log_features ? std::log10(x[i]) : x[i];
  s.transform_row(raw, z);
  return m.predict_one(std::span<const double>(z, d));
}

}  // namespace

Eigen::MatrixXd mlp_features(const Eigen::MatrixXd& x, bool log_features) {
  if (!log_features) return x;
  return x.array().log10().matrix();
}

double SurrogateBundle::saturation_probability(std::size_t i, const DesignVector& x) const {
  return scaled_predict(classifiers.at(i).second, scaler, log_features, x);
}

double SurrogateBundle::predict_metric(std::size_t i, const DesignVector& x) const {
  const auto& m = regressors.at(i).second;
  if (const auto* mlp = std::get_if<MlpModel>(&m)) return scaled_predict(*mlp, scaler, log_features, x);
  return std::get<ForestModel>(m).predict_one(x.values());
}

void SurrogateBundle::check_against(const ProblemSpec& p) const {
  if (scaler.dim() != static_cast<Index>(p.dim())) {
    throw std::invalid_argument("bundle feature count does not match problem " + p.name);
  }
  for (const auto& k : p.saturation_keys()) {
    const bool found = std::any_of(classifiers.begin(), classifiers.end(),
                                   [&](const auto& c) { return c.first == k; });
    if (!found) throw std::invalid_argument("bundle has no classifier for " + k);
  }
  for (const auto& [k, _] : regressors) {
    const bool found = std::any_of(p.constraints.begin(), p.constraints.end(),
                                   [&](const auto& c) { return c.key() == k; });
    if (!found) throw std::invalid_argument("bundle regressor " + k + " matches no constraint");
  }
}

namespace {

json report_to_json(const ModelReport& r) {
  json j = {{"key", r.key},
            {"kind", r.kind},
            {"model", r.model},
            {"train_seconds", r.train_seconds},
            {"train_rows", r.train_rows},
            {"test_rows", r.test_rows}};
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  if (r.r2) j["r2"] = *r.r2;
  if (r.mae) j["mae"] = *r.mae;
  return j;
}

ModelReport report_from_json(const json& j) {
  ModelReport r;
  r.key = j.at("key").get<std::string>();
  r.kind = j.at("kind").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.train_seconds = j.at("train_seconds").get<double>();
  r.train_rows = j.value("train_rows", std::size_t{0});
  r.test_rows = j.value("test_rows", std::size_t{0});
  if (j.contains("accuracy")) r.accuracy = j.at("accuracy").get<double>();
  if (j.contains("r2")) r.r2 = j.at("r2").get<double>();
  if (j.contains("mae")) r.mae = j.at("mae").get<double>();
  return r;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw BundleFormatError("missing bundle file " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw BundleFormatError("corrupted bundle file " + p.string() + ": " + e.what());
  }
}

}  // namespace

void save_bundle(const SurrogateBundle& b, const fs::path& dir) {
  fs::create_directories(dir);
  json models = json::array();
  for (std::size_t i = 0; i < b.classifiers.size(); ++i) {
    const std::string file = "classifier_" + std::to_string(i) + ".json";
    write_json(dir / file, json(b.classifiers[i].second));
    models.push_back({{"key", b.classifiers[i].first}, {"kind", "classifier"}, {"family", "mlp"}, {"file", file}});
  }
  for (std::size_t i = 0; i < b.regressors.size(); ++i) {
    const std::string file = "regressor_" + std::to_string(i) + ".json";
    const auto& m = b.regressors[i].second;
    const bool is_mlp = std::holds_alternative<MlpModel>(m);
    write_json(dir / file, is_mlp ? json(std::get<MlpModel>(m)) : json(std::get<ForestModel>(m)));
    models.push_back({{"key", b.regressors[i].first},
                      {"kind", "regressor"},
                      {"family", is_mlp ? "mlp" : "rf"},
                      {"file", file}});
  }
  json report = json::array();
  for (const auto& r : b.report) report.push_back(report_to_json(r));
  const json manifest = {{"format", kFormat},
                         {"format_version", kFormatVersion},
                         {"log_features", b.log_features},
                         {"scaler", b.scaler},
                         {"provenance",
                          {{"problem", b.provenance.problem},
                           {"dataset_hash", b.provenance.dataset_hash},
                           {"seed", b.provenance.seed},
                           {"model_version", b.provenance.model_version},
                           {"log_targets", b.provenance.log_targets}}},
                         {"models", models},
                         {"metrics", report}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write bundle manifest in " + dir.string());
}

SurrogateBundle load_bundle(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  SurrogateBundle b;
  try {
    if (m.at("format").get<std::string>() != kFormat) throw BundleFormatError("not a sizer bundle");
    if (m.at("format_version").get<int>() != kFormatVersion) {
      throw BundleFormatError("unsupported bundle format version");
    }
    b.log_features = m.value("log_features", false);
    b.scaler = m.at("scaler").get<Scaler>();
    const auto& p = m.at("provenance");
    b.provenance.problem = p.at("problem").get<std::string>();
    b.provenance.dataset_hash = p.at("dataset_hash").get<std::uint64_t>();
    b.provenance.seed = p.at("seed").get<std::uint64_t>();
    b.provenance.model_version = p.at("model_version").get<int>();
    b.provenance.log_targets = p.value("log_targets", std::vector<std::string>{});
    for (const auto& e : m.at("models")) {
      const auto key = e.at("key").get<std::string>();
      const auto kind = e.at("kind").get<std::string>();
      const auto family = e.at("family").get<std::string>();
      const json body = read_json(dir / e.at("file").get<std::string>());
      if (kind == "classifier" && family == "mlp") {
        b.classifiers.emplace_back(key, body.get<MlpModel>());
      } else if (kind == "regressor" && family == "mlp") {
        b.regressors.emplace_back(key, body.get<MlpModel>());
      } else if (kind == "regressor" && family == "rf") {
        b.regressors.emplace_back(key, body.get<ForestModel>());
      } else {
        throw BundleFormatError("unknown model entry " + kind + "/" + family);
      }
    }
    for (const auto& r : m.at("metrics")) b.report.push_back(report_from_json(r));
  } catch (const BundleFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw BundleFormatError("invalid bundle in " + dir.string() + ": " + e.what());
  }
  return b;
}

std::optional<std::string> provenance_mismatch(const SurrogateBundle& b, std::uint64_t dataset_hash) {
  std::optional<std::string> msg;
  if (b.provenance.dataset_hash != dataset_hash) {
    msg = "bundle was trained on dataset " + std::to_string(b.provenance.dataset_hash) +
          ", current dataset is " + std::to_string(dataset_hash);
  } else if (b.provenance.model_version != constants::kAnalyticModelVersion) {
    msg = "bundle was trained with analytic model version " +
          std::to_string(b.provenance.model_version);
  }
  if (msg) spdlog::warn("{}", *msg);
  return msg;
}

void TrainingSpec::validate(const ProblemSpec& p) const {
  MlpSpec c = classifier;
  c.validate();
  if (c.task != MlpTask::Classifier) throw std::invalid_argument("classifier spec must be a classifier");
  if (regressor_family == RegressorFamily::Mlp) {
    regressor_mlp.validate();
    if (regressor_mlp.task != MlpTask::Regressor) {
      throw std::invalid_argument("regressor spec must be a regressor");
    }
  } else {
    regressor_rf.validate();
  }
  if (cv_folds < 2) throw std::invalid_argument("cv_folds must be at least 2");
  if (log_features) {
    for (std::size_t i = 0; i < p.bounds.dim(); ++i) {
      if (!(p.bounds.lower(i) > 0.0)) {
        throw std::invalid_argument("log_features needs positive lower bounds (" + p.variables[i].name + ")");
      }
    }
  }
  for (const auto& k : regressed) {
    const bool found = std::any_of(p.constraints.begin(), p.constraints.end(),
                                   [&](const auto& cs) { return cs.key() == k; });
    if (!found) throw std::invalid_argument("regressed key " + k + " is not a constraint");
  }
  for (const auto& k : log_targets) {
    if (std::find(regressed.begin(), regressed.end(), k) == regressed.end()) {
      throw std::invalid_argument("log target " + k + " is not regressed");
    }
  }
}

void to_json(json& j, const TrainingSpec& s) {
  j = {{"classifier", s.classifier},
       {"classifier_grid", s.classifier_grid},
       {"regressor_family", s.regressor_family == RegressorFamily::Mlp ? "mlp" : "rf"},
       {"regressor_mlp", s.regressor_mlp},
       {"regressor_mlp_grid", s.regressor_mlp_grid},
       {"regressor_rf", s.regressor_rf},
       {"regressor_rf_grid", s.regressor_rf_grid},
       {"regressed", s.regressed},
       {"log_targets", s.log_targets},
       {"log_features", s.log_features},
       {"cv_folds", s.cv_folds},
       {"cv_rows", s.cv_rows}};
}

void from_json(const json& j, TrainingSpec& s) {
  s = TrainingSpec{};
  if (j.contains("classifier")) s.classifier = j.at("classifier").get<MlpSpec>();
  s.classifier.task = MlpTask::Classifier;
  if (j.contains("classifier_grid")) s.classifier_grid = j.at("classifier_grid").get<MlpGrid>();
  const auto fam = j.value("regressor_family", std::string("mlp"));
  if (fam != "mlp" && fam != "rf") throw std::invalid_argument("unknown regressor family '" + fam + "'");
  s.regressor_family = fam == "mlp" ? RegressorFamily::Mlp : RegressorFamily::Forest;
  if (j.contains("regressor_mlp")) s.regressor_mlp = j.at("regressor_mlp").get<MlpSpec>();
  s.regressor_mlp.task = MlpTask::Regressor;
  if (j.contains("regressor_mlp_grid")) s.regressor_mlp_grid = j.at("regressor_mlp_grid").get<MlpGrid>();
  if (j.contains("regressor_rf")) s.regressor_rf = j.at("regressor_rf").get<ForestSpec>();
  if (j.contains("regressor_rf_grid")) s.regressor_rf_grid = j.at("regressor_rf_grid").get<ForestGrid>();
  s.regressed = j.value("regressed", std::vector<std::string>{});
  s.log_targets = j.value("log_targets", std::vector<std::string>{});
  s.log_features = j.value("log_features", false);
  s.cv_folds = j.value("cv_folds", 3);
  s.cv_rows = j.value("cv_rows", std::size_t{0});
}

namespace {

struct Job {
  std::string key;
  bool classifier = true;
};

// Rows of `d` usable as regression targets for `key`.
std::vector<std::size_t> finite_rows(const Dataset& d, const std::string& key, bool log) {
  std::vector<std::size_t> rows;
  const auto& t = d.targets.at(key);
  for (Index i = 0; i < t.size(); ++i) {
    if (std::isfinite(t[i]) && (!log || t[i] > 0.0)) rows.push_back(static_cast<std::size_t>(i));
  }
  return rows;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(rows[i]));
  return out;
}

Eigen::VectorXd rows_of(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = y[static_cast<Index>(rows[i])];
  return out;
}

// First `limit` rows of a seeded shuffle, or all rows.
std::vector<std::size_t> cv_subset(std::size_t n, std::size_t limit, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (limit == 0 || limit >= n) return idx;
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

SurrogateBundle train_bundle(const Dataset& train, const Dataset& test, const TrainingSpec& spec,
                             std::uint64_t seed, std::size_t workers) {
  if (train.size() == 0) throw std::invalid_argument("train_bundle: empty training set");
  SurrogateBundle b;
  b.log_features = spec.log_features;
  const Eigen::MatrixXd f_train = mlp_features(train.features, b.log_features);
  b.scaler = Scaler::fit(f_train);
  const Eigen::MatrixXd xs_train = b.scaler.transform(f_train);
  const Eigen::MatrixXd xs_test = b.scaler.transform(mlp_features(test.features, b.log_features));
  b.provenance.problem = train.problem;
  b.provenance.seed = seed;
  b.provenance.model_version = constants::kAnalyticModelVersion;
  b.provenance.log_targets = spec.log_targets;

  std::vector<Job> jobs;
  for (const auto& [k, _] : train.labels) jobs.push_back({k, true});
  for (const auto& k : spec.regressed) {
    if (!train.targets.count(k)) throw std::invalid_argument("dataset has no metric column " + k);
    jobs.push_back({k, false});
  }

  std::vector<MlpModel> clf(jobs.size());
  std::vector<RegressorModel> reg(jobs.size());
  std::vector<ModelReport> reports(jobs.size());
  // Each model is single-threaded; forests get the leftover workers only when
  // trained alone.
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const auto& job = jobs[j];
    const std::uint64_t mseed = derive_seed(seed, job.key + (job.classifier ? "#clf" : "#reg"));
    const auto t0 = std::chrono::steady_clock::now();
    ModelReport& rep = reports[j];
    rep.key = job.key;
    rep.kind = job.classifier ? "classifier" : "regressor";

    if (job.classifier) {
      const auto& lab = train.labels.at(job.key);
      Eigen::VectorXd y(static_cast<Index>(lab.size()));
      for (std::size_t i = 0; i < lab.size(); ++i) y[static_cast<Index>(i)] = lab[i];
      const auto grid = spec.classifier_grid.expand(spec.classifier);
      MlpSpec chosen = grid.front();
      if (grid.size() > 1) {
        const auto cv = cv_subset(train.size(), spec.cv_rows, derive_seed(mseed, 1));
        chosen = grid[grid_search_mlp(grid, rows_of(xs_train, cv), rows_of(y, cv), spec.cv_folds,
                                      derive_seed(mseed, 2))
                          .best_index];
      }
      clf[j] = fit_mlp(chosen, xs_train, y, derive_seed(mseed, 3));
      rep.model = chosen.label();
      rep.train_rows = train.size();
      if (test.size() > 0) {
        const Eigen::VectorXd p = clf[j].predict(xs_test);
        const auto& truth = test.labels.at(job.key);
        std::vector<std::uint8_t> pred(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) pred[i] = p[static_cast<Index>(i)] >= 0.5;
        rep.accuracy = accuracy(pred, truth);
        rep.test_rows = test.size();
      }
    } else {
      const bool log = std::find(spec.log_targets.begin(), spec.log_targets.end(), job.key) !=
                       spec.log_targets.end();
      const auto rows = finite_rows(train, job.key, log);
      if (rows.empty()) throw std::invalid_argument("no usable rows for regressor " + job.key);
      const Eigen::VectorXd y = rows_of(train.targets.at(job.key), rows);
      const auto cv = cv_subset(rows.size(), spec.cv_rows, derive_seed(mseed, 1));
      std::vector<std::size_t> cv_rows(cv.size());
      for (std::size_t i = 0; i < cv.size(); ++i) cv_rows[i] = rows[cv[i]];
      const Eigen::VectorXd y_cv = rows_of(train.targets.at(job.key), cv_rows);
      const std::size_t rf_workers = jobs.size() == 1 ? workers : 1;

      if (spec.regressor_family == RegressorFamily::Mlp) {
        MlpSpec base = spec.regressor_mlp;
        base.transform = log ? TargetTransform::Log10 : TargetTransform::None;
        const auto grid = spec.regressor_mlp_grid.expand(base);
        MlpSpec chosen = grid.front();
        if (grid.size() > 1) {
          chosen = grid[grid_search_mlp(grid, rows_of(xs_train, cv_rows), y_cv, spec.cv_folds,
                                        derive_seed(mseed, 2))
                            .best_index];
        }
        reg[j] = fit_mlp(chosen, rows_of(xs_train, rows), y, derive_seed(mseed, 3));
        rep.model = chosen.label();
      } else {
        ForestSpec base = spec.regressor_rf;
        base.seed = derive_seed(mseed, 3);
        const auto grid = spec.regressor_rf_grid.expand(base);
        ForestSpec chosen = grid.front();
        if (grid.size() > 1) {
          chosen = grid[grid_search_rf(grid, rows_of(train.features, cv_rows), y_cv, spec.cv_folds,
                                       derive_seed(mseed, 2), rf_workers)
                            .best_index];
        }
        reg[j] = fit_rf(chosen, rows_of(train.features, rows), y, rf_workers);
        rep.model = chosen.label();
      }
      rep.train_rows = rows.size();

      if (test.size() > 0) {
        const auto trows = finite_rows(test, job.key, log);
        if (!trows.empty()) {
          const Eigen::VectorXd truth = rows_of(test.targets.at(job.key), trows);
          Eigen::VectorXd pred;
          if (const auto* m = std::get_if<MlpModel>(&reg[j])) {
            pred = m->predict(rows_of(xs_test, trows));
          } else {
            pred = std::get<ForestModel>(reg[j]).predict(rows_of(test.features, trows));
          }
          const std::span<const double> ps(pred.data(), static_cast<std::size_t>(pred.size()));
          const std::span<const double> ts(truth.data(), static_cast<std::size_t>(truth.size()));
          rep.r2 = r2(ps, ts);
          rep.mae = mae(ps, ts);
          rep.test_rows = trows.size();
        }
      }
    }
    rep.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::debug("trained {} {} in {:.2f}s", rep.kind, rep.key, rep.train_seconds);
  });

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (jobs[j].classifier) {
      b.classifiers.emplace_back(jobs[j].key, std::move(clf[j]));
    } else {
      b.regressors.emplace_back(jobs[j].key, std::move(reg[j]));
    }
  }
  b.report = std::move(reports);
  return b;
}

}  // namespace sizer
