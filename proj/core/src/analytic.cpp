#include "sizer/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sizer/problems.hpp"

namespace sizer {

namespace {

using constants::kBoltzmann;
using constants::kCelsiusToKelvin;
using constants::kElectronCharge;
using constants::kPi;

double checked_sqrt(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string("non-positive operand for ") + what);
  }
  return std::sqrt(v);
}

// Square-law transconductance and overdrive.
double gm(double k, double aspect, double id) { return checked_sqrt(2.0 * k * aspect * id, "gm"); }
double vov(double k, double aspect, double id) { return checked_sqrt(2.0 * id / (k * aspect), "vov"); }
double parallel(double a, double b) { return a * b / (a + b); }

}  // namespace

TsmcoaOperatingPoint tsmcoa_operating_point(const DesignVector& x, const TsmcoaParams& p) {
  if (x.dim() != 6) throw std::invalid_argument("TSMCOA expects 6 design variables");
  const double w12 = x[0], w34 = x[1], w58 = x[2], w6 = x[3], w7 = x[4], ibias = x[5];
  if (!(w58 > 0.0)) throw std::domain_error("non-positive operand for mirror ratio");
  const double l = p.length;

  TsmcoaOperatingPoint op;
  op.i5 = ibias;  // M5 and M8 are matched
  op.i1 = op.i5 / 2.0;
  op.i7 = ibias * w7 / w58;

  op.gm1 = gm(p.kn, w12 / l, op.i1);
  op.gm3 = gm(p.kp, w34 / l, op.i1);
  op.gm6 = gm(p.kp, w6 / l, op.i7);
  op.vov1 = vov(p.kn, w12 / l, op.i1);
  op.vov3 = vov(p.kp, w34 / l, op.i1);
  op.vov6 = vov(p.kp, w6 / l, op.i7);
  op.vov8 = vov(p.kn, w58 / l, ibias);

  op.ro2 = 1.0 / (p.lambda_n * op.i1);
  op.ro4 = 1.0 / (p.lambda_p * op.i1);
  op.ro6 = 1.0 / (p.lambda_p * op.i7);
  op.ro7 = 1.0 / (p.lambda_n * op.i7);

  op.gain = op.gm1 * parallel(op.ro2, op.ro4) * op.gm6 * parallel(op.ro6, op.ro7);
  op.ugb = op.gm1 / (2.0 * kPi * p.comp_cap);
  op.fp2 = op.gm6 / (2.0 * kPi * p.load_cap);
  return op;
}

EvaluationResult TsmcoaAnalytic::do_evaluate(const DesignVector& x) const {
  TsmcoaOperatingPoint op;
  try {
    op = tsmcoa_operating_point(x, p_);
  } catch (const std::domain_error& e) {
    return EvaluationResult::failed(FailureKind::Unrealizable, e.what());
  }

  const double kt = kBoltzmann * p_.temperature;
  const double av_db = 20.0 * std::log10(op.gain);
  const double sn = std::sqrt(16.0 * kt / (3.0 * op.gm1) * (1.0 + op.gm3 / op.gm1));
  const double ugb = op.ugb;

  EvaluationResult r;
  r.metrics["pm"] = 90.0 - std::atan(ugb / op.fp2) * 180.0 / kPi;
  r.metrics["f3db"] = ugb / op.gain;
  r.metrics["sr"] = op.i5 / p_.comp_cap;
  r.metrics["power"] = p_.vdd * (x[5] + op.i5 + op.i7);

  // Node voltages. The first-stage output sits one V_SG6 below the supply and
  // the amplifier output is biased at mid-rail.
  const double vgs1 = p_.vthn + op.vov1;
  const double vsg3 = p_.vthp + op.vov3;
  const double vsg6 = p_.vthp + op.vov6;
  const double vgs8 = p_.vthn + op.vov8;
  const double vout = p_.vdd / 2.0;
  const double vo1 = p_.vdd - vsg6;
  const double vd1 = p_.vdd - vsg3;

  const std::pair<std::string_view, double> corners[] = {{contexts::kIcmrMin, p_.icmr_min},
                                                         {contexts::kIcmrMax, p_.icmr_max}};
  for (const auto& [ctx, vcm] : corners) {
    r.metrics[metric_key("av", ctx)] = av_db;
    r.metrics[metric_key("ugb", ctx)] = ugb;
    r.metrics[metric_key("sn", ctx)] = sn;

    const double vtail = vcm - vgs1;
    auto& s = r.saturation;
    s[metric_key("M1", ctx)] = vd1 - vtail >= op.vov1;
    s[metric_key("M2", ctx)] = vo1 - vtail >= op.vov1;
    s[metric_key("M3", ctx)] = vd1 - vtail >= 0.0;
    s[metric_key("M4", ctx)] = p_.vdd - vo1 >= op.vov3;
    s[metric_key("M5", ctx)] = vtail >= op.vov8;
    s[metric_key("M6", ctx)] = p_.vdd - vout >= op.vov6;
    s[metric_key("M7", ctx)] = vout >= op.vov8;  // M7 runs at M8's current density
    s[metric_key("M8", ctx)] = vgs8 <= p_.vdd - p_.bias_headroom;
  }
  return r;
}

double bgr_vref(double r1, double r2, double celsius, const BgrParams& p) {
  const double vt = kBoltzmann * (celsius + kCelsiusToKelvin) / kElectronCharge;
  const double vbe = p.vbe0 - p.ctat_slope * (celsius - p.t0);
  return vbe + (r2 / r1) * vt * std::log(p.emitter_ratio);
}

EvaluationResult BgrAnalytic::do_evaluate(const DesignVector& x) const {
  if (x.dim() != 8) throw std::invalid_argument("BGR expects 8 design variables");
  const double w12 = x[0], w34 = x[1], w5 = x[2], r1 = x[3], r2 = x[4];
  const double l12 = x[5], l34 = x[6], l5 = x[7];
  if (!(r1 > 0.0)) return EvaluationResult::failed(FailureKind::Unrealizable, "R1 must be positive");
  if (r2 < 0.0) return EvaluationResult::failed(FailureKind::Unrealizable, "R2 is negative");
  for (double v : {w12, w34, w5, l12, l34, l5}) {
    if (!(v > 0.0)) {
      return EvaluationResult::failed(FailureKind::Unrealizable, "non-positive device dimension");
    }
  }

  const double ln_n = std::log(p_.emitter_ratio);
  const double t0k = p_.t0 + kCelsiusToKelvin;
  auto branch_current = [&](double celsius) {
    return kBoltzmann * (celsius + kCelsiusToKelvin) / kElectronCharge * ln_n / r1;
  };

  EvaluationResult r;
  const double v_m40 = bgr_vref(r1, r2, -40.0, p_);
  const double v_27 = bgr_vref(r1, r2, 27.0, p_);
  const double v_125 = bgr_vref(r1, r2, 125.0, p_);
  r.metrics[metric_key("vref", contexts::kTempM40)] = v_m40;
  r.metrics[metric_key("vref", contexts::kTemp27)] = v_27;
  r.metrics[metric_key("vref", contexts::kTemp125)] = v_125;
  if (!(v_27 > 0.0)) {
    return EvaluationResult::failed(FailureKind::Unrealizable, "non-positive reference voltage");
  }
  r.metrics["tc"] = compute_tc(v_m40, v_125, v_27);
  r.metrics["dvref"] = std::max({v_m40, v_27, v_125}) - std::min({v_m40, v_27, v_125});

  const double i27 = branch_current(27.0);
  r.metrics["iref"] = i27;
  r.metrics["power"] = p_.vdd * 3.0 * i27;

  try {
    // Calibrated smooth surrogates; they only have to exercise the gating.
    const double kt = kBoltzmann * t0k;
    const double gmp = gm(p_.kp, w12 / l12, i27);
    const double gmn = gm(p_.kn, w34 / l34, i27);
    const double thermal = 16.0 * kt / (3.0 * gmp) * (1.0 + gmn / gmp);
    const double flicker = p_.flicker_coeff / (p_.cox * w12 * l12 * p_.noise_frequency);
    r.metrics["noise"] = (1.0 + r2 / r1) * std::sqrt(thermal + flicker);
    const double lmin2 = p_.min_length * p_.min_length;
    r.metrics["psrr"] = p_.psrr_offset +
                        10.0 * std::log10(l12 * l34 / lmin2 * std::sqrt((w34 / l34) / (w12 / l12)));

    const std::pair<std::string_view, double> temps[] = {{contexts::kTempM40, -40.0},
                                                         {contexts::kTemp125, 125.0}};
    for (const auto& [ctx, celsius] : temps) {
      const double i = branch_current(celsius);
      const double mob = std::pow((celsius + kCelsiusToKelvin) / t0k, p_.mobility_exponent);
      const double kn = p_.kn * mob, kp = p_.kp * mob;
      const double vthn = p_.vthn - p_.vth_tempco * (celsius - p_.t0);
      const double vthp = p_.vthp - p_.vth_tempco * (celsius - p_.t0);
      const double vbe = p_.vbe0 - p_.ctat_slope * (celsius - p_.t0);
      const double vov_p = vov(kp, w12 / l12, i);
      const double vov_n = vov(kn, w34 / l34, i);
      const double vov_5 = vov(kp, w5 / l5, i);
      const double va = vbe + vthn + vov_n;  // M3 diode node
      const double vsg2 = vthp + vov_p;
      const double vref = bgr_vref(r1, r2, celsius, p_);
      auto& s = r.saturation;
      s[metric_key("M1", ctx)] = p_.vdd - va >= vov_p;
      s[metric_key("M2", ctx)] = vsg2 <= p_.vdd - vbe - vthn;
      s[metric_key("M3", ctx)] = va <= p_.vdd - vthp;
      s[metric_key("M4", ctx)] = p_.vdd - vsg2 - vbe >= vov_n;
      s[metric_key("M5", ctx)] = p_.vdd - vref >= vov_5;
    }
  } catch (const std::domain_error& e) {
    return EvaluationResult::failed(FailureKind::Unrealizable, e.what());
  }
  return r;
}

EvaluationResult SyntheticAnalytic::do_evaluate(const DesignVector& x) const {
  if (x.dim() < 2) throw std::invalid_argument("synthetic problem expects at least 2 variables");
  EvaluationResult r;
  double f = 0.0;
  for (double v : x.values()) f += v * v;
  r.metrics["f"] = f;
  r.metrics["s"] = x[0] + x[1];
  return r;
}

std::shared_ptr<const Evaluator> builtin_evaluator(std::string_view name) {
  if (name == "tsmcoa_analytic") return std::make_shared<TsmcoaAnalytic>();
  if (name == "bgr_analytic") return std::make_shared<BgrAnalytic>();
  if (name == "synthetic_analytic") return std::make_shared<SyntheticAnalytic>();
  throw std::invalid_argument("no built-in evaluator named '" + std::string(name) + "'");
}

}  // namespace sizer
