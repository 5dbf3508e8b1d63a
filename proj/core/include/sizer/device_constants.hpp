// Constants of the built-in analytic circuit models.
//
// These are generic square-law values chosen to give each problem a
// non-trivial feasible region. They are not foundry data; every number an
// analytic evaluator produces is relative to this table. Bump
// kAnalyticModelVersion whenever a value changes so persisted datasets and
// bundles can be told apart.
#pragma once

namespace sizer::constants {

inline constexpr int kAnalyticModelVersion = 1;

inline constexpr double kBoltzmann = 1.380649e-23;         // J/K
inline constexpr double kElectronCharge = 1.602176634e-19;  // C
inline constexpr double kCelsiusToKelvin = 273.15;
inline constexpr double kPi = 3.14159265358979323846;

// Two-stage Miller op-amp, 65 nm class.
namespace tsmcoa {
inline constexpr double kKn = 200e-6;       // A/V^2, mu_n*Cox
inline constexpr double kKp = 80e-6;        // A/V^2, mu_p*Cox
inline constexpr double kVthn = 0.35;       // V
inline constexpr double kVthp = 0.30;       // V, magnitude
inline constexpr double kLambdaN = 1.0;     // 1/V
inline constexpr double kLambdaP = 1.0;     // 1/V
inline constexpr double kVdd = 1.1;         // V
inline constexpr double kLoadCap = 200e-15;  // F
inline constexpr double kMillerRatio = 0.3;  // C_c / C_L
inline constexpr double kLength = 60e-9;    // m
inline constexpr double kIcmrMin = 0.6;     // V
inline constexpr double kIcmrMax = 1.0;     // V
inline constexpr double kTemperature = 300.15;  // K
/// Headroom the I_bias source needs above the diode-connected M8.
inline constexpr double kBiasHeadroom = 0.3;  // V
}  // namespace tsmcoa

// Bandgap reference, 180 nm class.
namespace bgr {
inline constexpr double kVdd = 1.8;            // V
inline constexpr double kT0 = 27.0;            // degC
inline constexpr double kVbe0 = 0.60;          // V at kT0
inline constexpr double kCtatSlope = 1.8e-3;   // V/K
inline constexpr double kEmitterRatio = 8.0;
inline constexpr double kKn = 250e-6;          // A/V^2 at kT0
inline constexpr double kKp = 60e-6;           // A/V^2 at kT0
inline constexpr double kVthn = 0.40;          // V at kT0
inline constexpr double kVthp = 0.40;          // V at kT0, magnitude
inline constexpr double kVthTempco = 0.8e-3;   // V/K, threshold drop with temperature
inline constexpr double kMobilityExponent = -1.5;
inline constexpr double kFlickerCoeff = 2e-24;  // V^2 F
inline constexpr double kCox = 8.5e-3;          // F/m^2
inline constexpr double kNoiseFrequency = 1e6;  // Hz
inline constexpr double kPsrrOffset = 10.0;     // dB
inline constexpr double kMinLength = 180e-9;    // m
}  // namespace bgr

}  // namespace sizer::constants
