#include "sizer/evaluator.hpp"

namespace sizer {

std::shared_ptr<CountedEvaluator> counted(std::shared_ptr<const Evaluator> e) {
  return std::make_shared<CountedEvaluator>(std::move(e));
}

}  // namespace sizer
