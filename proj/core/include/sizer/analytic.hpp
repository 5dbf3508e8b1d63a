// Closed-form evaluators standing in for circuit simulation of the TSMCOA
// and BGR problems.
#pragma once

#include <memory>
#include <string_view>

#include "sizer/device_constants.hpp"
#include "sizer/evaluator.hpp"

namespace sizer {

struct TsmcoaParams {
  double kn = constants::tsmcoa::kKn;
  double kp = constants::tsmcoa::kKp;
  double vthn = constants::tsmcoa::kVthn;
  double vthp = constants::tsmcoa::kVthp;
  double lambda_n = constants::tsmcoa::kLambdaN;
  double lambda_p = constants::tsmcoa::kLambdaP;
  double vdd = constants::tsmcoa::kVdd;
  double load_cap = constants::tsmcoa::kLoadCap;
  double comp_cap = constants::tsmcoa::kMillerRatio * constants::tsmcoa::kLoadCap;
  double length = constants::tsmcoa::kLength;
  double icmr_min = constants::tsmcoa::kIcmrMin;
  double icmr_max = constants::tsmcoa::kIcmrMax;
  double temperature = constants::tsmcoa::kTemperature;
  double bias_headroom = constants::tsmcoa::kBiasHeadroom;
};

/// Small-signal quantities of one TSMCOA design, exposed for tests.
struct TsmcoaOperatingPoint {
  double i5 = 0, i1 = 0, i7 = 0;  // tail, input-branch and second-stage currents
  double gm1 = 0, gm3 = 0, gm6 = 0;
  double ro2 = 0, ro4 = 0, ro6 = 0, ro7 = 0;
  double vov1 = 0, vov3 = 0, vov6 = 0, vov8 = 0;
  double gain = 0;  // linear
  double ugb = 0, fp2 = 0;
};

/// x = [W12, W34, W58, W6, W7, I_bias]. Throws std::domain_error when a
/// square-root operand is not positive.
TsmcoaOperatingPoint tsmcoa_operating_point(const DesignVector& x, const TsmcoaParams& p);

class TsmcoaAnalytic final : public Evaluator {
 public:
  explicit TsmcoaAnalytic(TsmcoaParams p = {}) : p_(p) {}
  const TsmcoaParams& params() const noexcept { return p_; }

 protected:
  EvaluationResult do_evaluate(const DesignVector& x) const override;

 private:
  TsmcoaParams p_;
};

struct BgrParams {
  double vdd = constants::bgr::kVdd;
  double t0 = constants::bgr::kT0;
  double vbe0 = constants::bgr::kVbe0;
  double ctat_slope = constants::bgr::kCtatSlope;
  double emitter_ratio = constants::bgr::kEmitterRatio;
  double kn = constants::bgr::kKn;
  double kp = constants::bgr::kKp;
  double vthn = constants::bgr::kVthn;
  double vthp = constants::bgr::kVthp;
  double vth_tempco = constants::bgr::kVthTempco;
  double mobility_exponent = constants::bgr::kMobilityExponent;
  double flicker_coeff = constants::bgr::kFlickerCoeff;
  double cox = constants::bgr::kCox;
  double noise_frequency = constants::bgr::kNoiseFrequency;
  double psrr_offset = constants::bgr::kPsrrOffset;
  double min_length = constants::bgr::kMinLength;
};

/// Reference voltage at temperature `celsius` for resistors r1, r2.
double bgr_vref(double r1, double r2, double celsius, const BgrParams& p);

/// x = [W12, W34, W5, R1, R2, L12, L34, L5].
class BgrAnalytic final : public Evaluator {
 public:
  explicit BgrAnalytic(BgrParams p = {}) : p_(p) {}
  const BgrParams& params() const noexcept { return p_; }

 protected:
  EvaluationResult do_evaluate(const DesignVector& x) const override;

 private:
  BgrParams p_;
};

/// Metrics of the synthetic benchmark: f = sum of squares, s = x1 + x2.
class SyntheticAnalytic final : public Evaluator {
 protected:
  EvaluationResult do_evaluate(const DesignVector& x) const override;
};

/// Built-in evaluator named by ProblemSpec::evaluator; throws
/// std::invalid_argument for an unknown or empty name.
std::shared_ptr<const Evaluator> builtin_evaluator(std::string_view name);

}  // namespace sizer
