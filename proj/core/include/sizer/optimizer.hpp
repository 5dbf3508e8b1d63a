// Genetic optimizer with an optional surrogate feasibility gate.
//
// SGA: crossover and mutated-crossover offspring, fixed mutation window.
// MGA: adds a parent-mutation stream and shrinks the window linearly.
// MGA_MLSP / MGA_MLSCP: MGA whose candidates must first pass the saturation
// classifiers (and, for MLSCP, the constraint regressors) before the
// evaluator is called.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sizer/bundle.hpp"
#include "sizer/core.hpp"
#include "sizer/evaluator.hpp"
#include "sizer/rng.hpp"

namespace sizer {

enum class GateMode { SGA, MGA, MGA_MLSP, MGA_MLSCP };

std::string_view to_string(GateMode m);
GateMode gate_mode_from_string(std::string_view s);
inline bool uses_classifiers(GateMode m) { return m == GateMode::MGA_MLSP || m == GateMode::MGA_MLSCP; }
inline bool uses_regressors(GateMode m) { return m == GateMode::MGA_MLSCP; }

struct GaConfig {
  std::size_t population = 20;
  std::size_t gen_max = 200;
  double alpha_start = 1.0;
  double alpha_end = 0.05;
  // Per offspring slot: attempts that reach the geometry check or the
  // evaluator, and, separately, candidates turned away by the surrogates.
  std::size_t retry_budget = 50;
  std::size_t surrogate_retry_budget = 500;
  GateMode mode = GateMode::MGA;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

enum class RejectCause { None, Geometry, Classifier, Regressor, SpiceConstraint, SpiceSaturation, SpiceFailure };

std::string_view to_string(RejectCause c);

struct GateResult {
  RejectCause cause = RejectCause::None;
  bool evaluated = false;
  EvaluationResult eval;
  double fitness = std::numeric_limits<double>::infinity();
  /// One plus the geometry shortfall for geometry rejections, the
  /// feasibility-report violation for evaluated candidates,
  /// Gate::failure_violation() for failed evaluations and zero for ML
  /// rejections.
  double violation = 0.0;

  bool passed() const noexcept { return cause == RejectCause::None; }
};

/// Candidate screening bound to one problem, mode and evaluator.
class Gate {
 public:
  /// `predictor` must be non-null for the ML modes and is ignored otherwise.
  Gate(const ProblemSpec& p, GateMode mode, const FeasibilityPredictor* predictor,
       const Evaluator& evaluator);

  GateResult check(const DesignVector& x) const;

  /// Predicted violation of a candidate in the same units as
  /// FeasibilityReport::violation: 2*(0.5 - p) per classifier below the
  /// threshold plus the normalized shortfall of each regressed constraint.
  double predicted_violation(const DesignVector& x) const;

  /// Upper bound used for candidates whose evaluation failed outright.
  double failure_violation() const noexcept { return failure_violation_; }

 private:
  const ProblemSpec& problem_;
  GateMode mode_;
  const FeasibilityPredictor* predictor_;
  const Evaluator& evaluator_;
  std::vector<std::size_t> classifiers_;
  std::vector<std::pair<std::size_t, const ConstraintSpec*>> regressors_;
  double failure_violation_ = 0.0;
};

GateResult feasibility_check(const DesignVector& x, GateMode mode,
                             const FeasibilityPredictor* predictor, const Evaluator& evaluator,
                             const ProblemSpec& p);

struct Individual {
  DesignVector x;
  double fitness = std::numeric_limits<double>::infinity();
  EvaluationResult eval;
  bool evaluated = false;
  /// Kept after the retry budget ran out; ranks after every feasible one.
  bool penalized = false;
  double violation = 0.0;
  std::uint64_t id = 0;  // creation order
};

/// Feasible first by fitness, then penalized by violation; ties by id.
bool ranks_before(const Individual& a, const Individual& b);

double alpha_at(std::size_t gen, const GaConfig& cfg);

/// a[0..point) followed by b[point..D).
DesignVector crossover(const DesignVector& a, const DesignVector& b, std::size_t point);

/// Resamples between 1 and D distinct genes uniformly within
/// x_i +- alpha*(UB_i - LB_i)/2, clipped to the bounds.
DesignVector mutate(const DesignVector& base, double alpha, const Bounds& bounds, Rng& rng);

struct RejectCounts {
  std::uint64_t geometry = 0;
  std::uint64_t classifier = 0;
  std::uint64_t regressor = 0;
  std::uint64_t spice_constraint = 0;
  std::uint64_t spice_saturation = 0;
  std::uint64_t spice_failure = 0;
  std::uint64_t passed = 0;

  std::uint64_t spice() const noexcept { return spice_constraint + spice_saturation + spice_failure; }
  void add(RejectCause c);
  RejectCounts& operator+=(const RejectCounts& o);
};

struct GenerationRecord {
  std::size_t generation = 0;  // 0: initial population
  double best_fitness = std::numeric_limits<double>::infinity();
  double mean_fitness = std::numeric_limits<double>::infinity();
  std::uint64_t cum_calls = 0;
  RejectCounts cum_rejects;
  std::size_t feasible = 0;
  std::uint64_t penalized_slots = 0;  // cumulative
};

struct RunTrace {
  GateMode mode = GateMode::MGA;
  std::uint64_t seed = 0;
  std::vector<GenerationRecord> generations;
  std::vector<Individual> final_population;
  std::optional<Individual> best;  // best feasible individual, if any
  double wall_seconds = 0.0;

  std::uint64_t total_calls() const { return generations.empty() ? 0 : generations.back().cum_calls; }
  double best_fitness() const {
    return generations.empty() ? std::numeric_limits<double>::infinity()
                               : generations.back().best_fitness;
  }
};

/// Stateful driver exposing the individual phases of a run.
class GeneticOptimizer {
 public:
  GeneticOptimizer(const ProblemSpec& p, const Evaluator& evaluator, GaConfig cfg,
                   const FeasibilityPredictor* predictor = nullptr);

  /// N individuals by uniform sampling within the bounds.
  std::vector<Individual> init_population();
  /// One generation: offspring streams, pooling and elitist truncation.
  std::vector<Individual> step(const std::vector<Individual>& population, std::size_t gen);

  /// Calls made through this optimizer so far.
  std::uint64_t calls() const noexcept { return counter_.call_count(); }
  const RejectCounts& rejects() const noexcept { return rejects_; }
  std::uint64_t penalized_slots() const noexcept { return penalized_slots_; }
  /// Largest pool size seen by step().
  std::size_t max_pool() const noexcept { return max_pool_; }

 private:
  enum class Stream { Init, Crossover, MutatedCrossover, ParentMutation };

  struct Slot {
    std::optional<Individual> ind;
    RejectCounts rejects;
    bool penalized = false;
  };

  template <typename Make>
  Slot fill_slot(Make&& make);
  void note_feasible(const Individual& ind);

  const ProblemSpec& problem_;
  GaConfig cfg_;
  CountedEvaluator counter_;
  Gate gate_;
  RejectCounts rejects_;
  std::uint64_t penalized_slots_ = 0;
  std::uint64_t next_id_ = 0;
  std::size_t max_pool_ = 0;
  double worst_feasible_ = 0.0;
  bool any_feasible_ = false;
};

/// Initial population plus cfg.gen_max generations.
RunTrace run(const ProblemSpec& p, const Evaluator& evaluator, const GaConfig& cfg,
             const FeasibilityPredictor* predictor = nullptr);

/// run() with the SGA operator set.
RunTrace run_sga(const ProblemSpec& p, const Evaluator& evaluator, GaConfig cfg);

}  // namespace sizer
