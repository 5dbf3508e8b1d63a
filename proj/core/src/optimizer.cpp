#include "sizer/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "sizer/parallel.hpp"

namespace sizer {

namespace {
constexpr double kFailureViolation = 1e6;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::string_view to_string(GateMode m) {
  switch (m) {
    case GateMode::SGA: return "SGA";
    case GateMode::MGA: return "MGA";
    case GateMode::MGA_MLSP: return "MGA_MLSP";
    case GateMode::MGA_MLSCP: return "MGA_MLSCP";
  }
  return "?";
}

GateMode gate_mode_from_string(std::string_view s) {
  for (auto m : {GateMode::SGA, GateMode::MGA, GateMode::MGA_MLSP, GateMode::MGA_MLSCP}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown gate mode '" + std::string(s) + "'");
}

std::string_view to_string(RejectCause c) {
  switch (c) {
    case RejectCause::None: return "none";
    case RejectCause::Geometry: return "geometry";
    case RejectCause::Classifier: return "classifier";
    case RejectCause::Regressor: return "regressor";
    case RejectCause::SpiceConstraint: return "spice_constraint";
    case RejectCause::SpiceSaturation: return "spice_saturation";
    case RejectCause::SpiceFailure: return "spice_failure";
  }
  return "?";
}

void GaConfig::validate() const {
  if (population < 2) throw std::invalid_argument("population must be at least 2");
  if (gen_max < 1) throw std::invalid_argument("gen_max must be at least 1");
  if (!(alpha_end > 0.0 && alpha_end <= alpha_start && alpha_start <= 1.0)) {
    throw std::invalid_argument("alpha schedule must satisfy 0 < alpha_end <= alpha_start <= 1");
  }
  if (retry_budget < 1) throw std::invalid_argument("retry budget must be at least 1");
  if (surrogate_retry_budget < 1) throw std::invalid_argument("surrogate retry budget must be at least 1");
}

Gate::Gate(const ProblemSpec& p, GateMode mode, const FeasibilityPredictor* predictor,
           const Evaluator& evaluator)
    : problem_(p), mode_(mode), predictor_(predictor), evaluator_(evaluator) {
  failure_violation_ = kFailureViolation;
  if (!uses_classifiers(mode)) return;
  if (predictor == nullptr) {
    throw std::invalid_argument(std::string(to_string(mode)) + " needs surrogate models");
  }
  for (const auto& key : p.saturation_keys()) {
    bool found = false;
    for (std::size_t i = 0; i < predictor->classifier_count(); ++i) {
      found = found || predictor->classifier_key(i) == key;
    }
    if (!found) throw std::invalid_argument("no saturation classifier for " + key);
  }
  for (std::size_t i = 0; i < predictor->classifier_count(); ++i) classifiers_.push_back(i);
  if (!uses_regressors(mode)) return;
  for (std::size_t i = 0; i < predictor->regressor_count(); ++i) {
    const auto& key = predictor->regressor_key(i);
    const auto it = std::find_if(p.constraints.begin(), p.constraints.end(),
                                 [&](const ConstraintSpec& c) { return c.key() == key; });
    if (it == p.constraints.end()) throw std::invalid_argument("regressor " + key + " matches no constraint");
    regressors_.emplace_back(i, &*it);
  }
}

GateResult Gate::check(const DesignVector& x) const {
  GateResult g;
  const auto geo = problem_.check_geometry(x);
  if (!geo.ok) {
    g.cause = RejectCause::Geometry;
    g.violation = 1.0 + geo.violation;
    return g;
  }
  for (std::size_t i : classifiers_) {
    if (predictor_->saturation_probability(i, x) < 0.5) {
      g.cause = RejectCause::Classifier;
      return g;
    }
  }
  for (const auto& [i, c] : regressors_) {
    if (!c->satisfied(predictor_->predict_metric(i, x))) {
      g.cause = RejectCause::Regressor;
      return g;
    }
  }

  g.eval = evaluator_.evaluate(x);
  g.evaluated = true;
  if (!g.eval.ok()) {
    g.cause = RejectCause::SpiceFailure;
    g.violation = failure_violation_;
    return g;
  }
  const auto rep = check_constraints(g.eval, problem_);
  if (!rep.overall) {
    g.cause = rep.constraints_ok ? RejectCause::SpiceSaturation : RejectCause::SpiceConstraint;
    g.violation = rep.violation();
    return g;
  }
  const auto fit = objective_value(problem_, x, g.eval);
  if (!fit) {
    g.cause = RejectCause::SpiceFailure;
    g.violation = failure_violation_;
    return g;
  }
  g.fitness = *fit;
  return g;
}

double Gate::predicted_violation(const DesignVector& x) const {
  double v = 0.0;
  for (std::size_t i : classifiers_) {
    v += 2.0 * std::max(0.0, 0.5 - predictor_->saturation_probability(i, x));
  }
  for (const auto& [i, c] : regressors_) v += c->violation(predictor_->predict_metric(i, x));
  return v;
}

GateResult feasibility_check(const DesignVector& x, GateMode mode,
                             const FeasibilityPredictor* predictor, const Evaluator& evaluator,
                             const ProblemSpec& p) {
  return Gate(p, mode, predictor, evaluator).check(x);
}

bool ranks_before(const Individual& a, const Individual& b) {
  if (a.penalized != b.penalized) return !a.penalized;
  const double ka = a.penalized ? a.violation : a.fitness;
  const double kb = b.penalized ? b.violation : b.fitness;
  if (ka != kb) return ka < kb;
  return a.id < b.id;
}

double alpha_at(std::size_t gen, const GaConfig& cfg) {
  if (cfg.gen_max <= 1) return cfg.alpha_start;
  const double t = static_cast<double>(gen) / static_cast<double>(cfg.gen_max - 1);
  return cfg.alpha_start + (cfg.alpha_end - cfg.alpha_start) * t;
}

DesignVector crossover(const DesignVector& a, const DesignVector& b, std::size_t point) {
  if (a.dim() != b.dim()) throw std::invalid_argument("crossover: dimension mismatch");
  if (point > a.dim()) throw std::invalid_argument("crossover: point out of range");
  std::vector<double> v(a.vec().begin(), a.vec().begin() + static_cast<std::ptrdiff_t>(point));
  v.insert(v.end(), b.vec().begin() + static_cast<std::ptrdiff_t>(point), b.vec().end());
  return DesignVector(std::move(v));
}

DesignVector mutate(const DesignVector& base, double alpha, const Bounds& bounds, Rng& rng) {
  const std::size_t d = base.dim();
  if (bounds.dim() != d) throw std::invalid_argument("mutate: dimension mismatch");
  std::vector<double> v = base.vec();
  std::vector<std::size_t> genes(d);
  for (std::size_t i = 0; i < d; ++i) genes[i] = i;
  const std::size_t count = std::uniform_int_distribution<std::size_t>(1, d)(rng);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(k, d - 1)(rng);
    std::swap(genes[k], genes[j]);
    const std::size_t g = genes[k];
    const double half = alpha * bounds.width(g) / 2.0;
    const double lo = std::max(bounds.lower(g), v[g] - half);
    const double hi = std::min(bounds.upper(g), v[g] + half);
    v[g] = hi > lo ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
  }
  return DesignVector(std::move(v));
}

void RejectCounts::add(RejectCause c) {
  switch (c) {
    case RejectCause::None: ++passed; break;
    case RejectCause::Geometry: ++geometry; break;
    case RejectCause::Classifier: ++classifier; break;
    case RejectCause::Regressor: ++regressor; break;
    case RejectCause::SpiceConstraint: ++spice_constraint; break;
    case RejectCause::SpiceSaturation: ++spice_saturation; break;
    case RejectCause::SpiceFailure: ++spice_failure; break;
  }
}

RejectCounts& RejectCounts::operator+=(const RejectCounts& o) {
  geometry += o.geometry;
  classifier += o.classifier;
  regressor += o.regressor;
  spice_constraint += o.spice_constraint;
  spice_saturation += o.spice_saturation;
  spice_failure += o.spice_failure;
  passed += o.passed;
  return *this;
}

GeneticOptimizer::GeneticOptimizer(const ProblemSpec& p, const Evaluator& evaluator, GaConfig cfg,
                                   const FeasibilityPredictor* predictor)
    : problem_(p),
      cfg_(cfg),
      counter_(std::shared_ptr<const Evaluator>(std::shared_ptr<void>(), &evaluator)),
      gate_(p, cfg.mode, predictor, counter_) {
  cfg_.validate();
  if (p.bounds.dim() != p.dim()) throw std::invalid_argument("problem bounds do not match its variables");
}

template <typename Make>
GeneticOptimizer::Slot GeneticOptimizer::fill_slot(Make&& make) {
  Slot s;
  std::optional<Individual> fallback;
  std::vector<DesignVector> gated;
  std::size_t checked = 0;
  while (checked < cfg_.retry_budget && gated.size() < cfg_.surrogate_retry_budget) {
    DesignVector x = make();
    GateResult g = gate_.check(x);
    s.rejects.add(g.cause);
    if (g.passed()) {
      s.ind = Individual{std::move(x), g.fitness, std::move(g.eval), true, false, 0.0, 0};
      return s;
    }
    if (g.cause == RejectCause::Classifier || g.cause == RejectCause::Regressor) {
      gated.push_back(std::move(x));
      continue;
    }
    ++checked;
    if (!fallback || g.violation < fallback->violation) {
      fallback = Individual{std::move(x), kInf, std::move(g.eval), g.evaluated, true, g.violation, 0};
    }
  }
  // Budget exhausted: keep the least-violating candidate. Surrogate-rejected
  // candidates are ranked by predicted violation and stay unevaluated.
  for (auto& x : gated) {
    const double v = gate_.predicted_violation(x);
    if (!fallback || v < fallback->violation) {
      fallback = Individual{std::move(x), kInf, EvaluationResult{}, false, true, v, 0};
    }
  }
  s.ind = std::move(fallback);
  s.penalized = true;
  return s;
}

void GeneticOptimizer::note_feasible(const Individual& ind) {
  if (ind.penalized) return;
  worst_feasible_ = any_feasible_ ? std::max(worst_feasible_, ind.fitness) : ind.fitness;
  any_feasible_ = true;
}

std::vector<Individual> GeneticOptimizer::init_population() {
  const std::size_t n = cfg_.population;
  std::vector<Slot> slots(n);
  parallel_for(n, cfg_.workers, [&](std::size_t i) {
    Rng rng(derive_seed(cfg_.seed, 0, static_cast<int>(Stream::Init), i));
    slots[i] = fill_slot([&] {
      std::vector<double> v(problem_.dim());
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = std::uniform_real_distribution<double>(problem_.bounds.lower(j),
                                                      problem_.bounds.upper(j))(rng);
      }
      return DesignVector(std::move(v));
    });
  });
  std::vector<Individual> pop;
  for (auto& s : slots) {
    rejects_ += s.rejects;
    penalized_slots_ += s.penalized;
    Individual ind = std::move(*s.ind);
    ind.id = next_id_++;
    if (!ind.penalized) note_feasible(ind);
    pop.push_back(std::move(ind));
  }
  for (auto& ind : pop) {
    if (ind.penalized) ind.fitness = worst_feasible_ + ind.violation;
  }
  std::stable_sort(pop.begin(), pop.end(), ranks_before);
  return pop;
}

std::vector<Individual> GeneticOptimizer::step(const std::vector<Individual>& population,
                                               std::size_t gen) {
  const std::size_t n = population.size();
  if (n < 2) throw std::invalid_argument("step: population must hold at least two individuals");
  const bool sga = cfg_.mode == GateMode::SGA;
  const double alpha = sga ? 1.0 : alpha_at(gen, cfg_);
  const std::size_t d = problem_.dim();
  const std::uint64_t g1 = gen + 1;

  std::vector<Slot> cx(n), mcx(n), pm(sga ? 0 : n);
  const std::size_t tasks = sga ? n : 2 * n;
  parallel_for(tasks, cfg_.workers, [&](std::size_t t) {
    if (t < n) {
      Rng rng(derive_seed(cfg_.seed, g1, static_cast<int>(Stream::Crossover), t));
      cx[t] = fill_slot([&] {
        const std::size_t a = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        std::size_t b = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
        if (b >= a) ++b;
        const std::size_t point = d > 1 ? std::uniform_int_distribution<std::size_t>(1, d - 1)(rng) : d;
        return crossover(population[a].x, population[b].x, point);
      });
      const DesignVector base = cx[t].ind->x;
      Rng mrng(derive_seed(cfg_.seed, g1, static_cast<int>(Stream::MutatedCrossover), t));
      mcx[t] = fill_slot([&] { return mutate(base, alpha, problem_.bounds, mrng); });
    } else {
      const std::size_t i = t - n;
      Rng rng(derive_seed(cfg_.seed, g1, static_cast<int>(Stream::ParentMutation), i));
      pm[i] = fill_slot([&] { return mutate(population[i].x, alpha, problem_.bounds, rng); });
    }
  });

  std::vector<Individual> pool = population;
  for (auto* stream : {&cx, &mcx, &pm}) {
    for (auto& s : *stream) {
      rejects_ += s.rejects;
      penalized_slots_ += s.penalized;
      Individual ind = std::move(*s.ind);
      ind.id = next_id_++;
      if (!ind.penalized) note_feasible(ind);
      pool.push_back(std::move(ind));
    }
  }
  for (std::size_t i = n; i < pool.size(); ++i) {
    if (pool[i].penalized) pool[i].fitness = worst_feasible_ + pool[i].violation;
  }
  max_pool_ = std::max(max_pool_, pool.size());
  std::sort(pool.begin(), pool.end(), ranks_before);
  pool.resize(n);
  return pool;
}

namespace {

GenerationRecord record(const std::vector<Individual>& pop, std::size_t gen,
                        const GeneticOptimizer& opt) {
  GenerationRecord r;
  r.generation = gen;
  double sum = 0.0;
  for (const auto& ind : pop) {
    if (ind.penalized) continue;
    ++r.feasible;
    sum += ind.fitness;
    r.best_fitness = std::min(r.best_fitness, ind.fitness);
  }
  if (r.feasible > 0) r.mean_fitness = sum / static_cast<double>(r.feasible);
  r.cum_calls = opt.calls();
  r.cum_rejects = opt.rejects();
  r.penalized_slots = opt.penalized_slots();
  return r;
}

}  // namespace

RunTrace run(const ProblemSpec& p, const Evaluator& evaluator, const GaConfig& cfg,
             const FeasibilityPredictor* predictor) {
  const auto t0 = std::chrono::steady_clock::now();
  GeneticOptimizer opt(p, evaluator, cfg, predictor);
  RunTrace trace;
  trace.mode = cfg.mode;
  trace.seed = cfg.seed;
  auto pop = opt.init_population();
  trace.generations.push_back(record(pop, 0, opt));
  for (std::size_t g = 0; g < cfg.gen_max; ++g) {
    pop = opt.step(pop, g);
    trace.generations.push_back(record(pop, g + 1, opt));
  }
  if (!pop.empty() && !pop.front().penalized) trace.best = pop.front();
  trace.final_population = std::move(pop);
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

RunTrace run_sga(const ProblemSpec& p, const Evaluator& evaluator, GaConfig cfg) {
  cfg.mode = GateMode::SGA;
  return run(p, evaluator, cfg, nullptr);
}

}  // namespace sizer
