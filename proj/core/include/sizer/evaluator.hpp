// The "spice" abstraction. Every call to evaluate() is one simulation and is
// counted, whether or not the result is usable.
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>

#include "sizer/core.hpp"

namespace sizer {

class Evaluator {
 public:
  virtual ~Evaluator() = default;

  EvaluationResult evaluate(const DesignVector& x) const {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_evaluate(x);
  }

  std::uint64_t call_count() const noexcept { return calls_.load(std::memory_order_relaxed); }
  void reset() noexcept { calls_.store(0, std::memory_order_relaxed); }

 protected:
  virtual EvaluationResult do_evaluate(const DesignVector& x) const = 0;

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Forwards to a shared evaluator and keeps its own call count, so one
/// underlying model can serve several independently-counted runs.
class CountedEvaluator final : public Evaluator {
 public:
  explicit CountedEvaluator(std::shared_ptr<const Evaluator> inner) : inner_(std::move(inner)) {}

 protected:
  EvaluationResult do_evaluate(const DesignVector& x) const override {
    return inner_->evaluate(x);
  }

 private:
  std::shared_ptr<const Evaluator> inner_;
};

std::shared_ptr<CountedEvaluator> counted(std::shared_ptr<const Evaluator> e);

/// Evaluator backed by a callable; used for synthetic benchmarks and tests.
class FunctionEvaluator final : public Evaluator {
 public:
  using Fn = std::function<EvaluationResult(const DesignVector&)>;
  explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}

 protected:
  EvaluationResult do_evaluate(const DesignVector& x) const override { return fn_(x); }

 private:
  Fn fn_;
};

}  // namespace sizer
