#pragma once

// Physical constants, sensor parameters and derived rates.
//
// Units: every frequency stored here is an angular frequency in rad/s, fields
// are in Tesla and rates in 1/s. Conversion from Hz happens at the I/O
// boundary (config and CLI) only.

#include <array>
#include <numbers>
#include <optional>

namespace dqsim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Convert a frequency in Hz to rad/s.
constexpr double angular(double hz) { return kTwoPi * hz; }

struct PhysicalConstants {
  double zero_field_splitting = kTwoPi * 2.87e9;  ///< D, rad/s
  double gyromagnetic_ratio = -kTwoPi * 28e9;     ///< γ_e, rad/s/T (negative)
  double hyperfine_coupling = -kTwoPi * 2.16e6;   ///< A, rad/s (negative)
};

struct SensorParams {
  double static_field = 0.0;                 ///< B₀, T
  double drive_amplitude = 0.0;              ///< B₁, T
  double microwave_angular_frequency = 0.0;  ///< ω_mw, rad/s
  double amplitude_damping_rate = 5e5;       ///< Γ₁, 1/s (laser pumping)
  double dephasing_rate = 4.75e6;            ///< Γ₂, 1/s
  int nuclear_projection = 0;                ///< m_I ∈ {−1, 0, +1}
  /// Intrinsic longitudinal relaxation (both directions). Only the numeric
  /// Liouvillian and the integrator honour it; the closed forms require 0.
  double intrinsic_relaxation_rate = 0.0;

  /// Throws ParameterError when Γ₁ ≤ 0, Γ₂ < 0, B₁ < 0 or m_I is out of range.
  void validate() const;
};

struct DerivedRates {
  double t1 = 0.0;          ///< 1/Γ₁, s
  double t2 = 0.0;          ///< 1/(Γ₂ + Γ₁/2), s
  double saturation = 0.0;  ///< s = γ_e² B₁² T₁ T₂
  double detuning = 0.0;    ///< Δ = ω_e − ω_mw, rad/s
};

struct DriveField {
  double amplitude = 0.0;          ///< b_ac, T
  double angular_frequency = 0.0;  ///< ω_ac, rad/s
  double phase = 0.0;              ///< φ_ac, rad

  double at(double t) const;
};

/// ω_e = D − γ_e·B₀ + m_I·A.
double transition_frequency(double static_field, int nuclear_projection,
                            const PhysicalConstants& constants);

DerivedRates derive_rates(const SensorParams& params, const PhysicalConstants& constants);

/// √(1+s)/(√3·T₂): the detuning maximizing |∂P₀/∂b|.
double optimal_detuning(const DerivedRates& rates);

/// A sensor is the immutable pairing of parameters, constants and the rates
/// derived from them.
class Sensor {
 public:
  explicit Sensor(const SensorParams& params, const PhysicalConstants& constants = {});

  const SensorParams& params() const noexcept { return params_; }
  const PhysicalConstants& constants() const noexcept { return constants_; }
  const DerivedRates& rates() const noexcept { return rates_; }

  /// Same sensor with a different nuclear projection (hence detuning).
  Sensor with_nuclear_projection(int m_I) const;

 private:
  SensorParams params_;
  PhysicalConstants constants_;
  DerivedRates rates_;
};

/// Unpolarized (by default) ¹⁴N population over m_I = −1, 0, +1.
struct HyperfineEnsemble {
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  ///< index m_I + 1
  SensorParams base;  ///< shared parameters; base.nuclear_projection is ignored
  PhysicalConstants constants;

  void validate() const;
  double weight(int m_I) const { return weights.at(static_cast<std::size_t>(m_I + 1)); }
  Sensor member(int m_I) const;
};

/// B₁ that realizes a target saturation for the given rates: s = γ_e²B₁²T₁T₂.
double drive_for_saturation(double saturation, double t1, double t2,
                            const PhysicalConstants& constants);

/// Γ₂ = 1/T₂_target − Γ₁/2, clamped at 0.
double dephasing_for_t2(double t2_target, double amplitude_damping_rate);

/// Where the microwave sits relative to the hyperfine lines.
struct OperatingPoint {
  std::optional<double> saturation;  ///< overrides B₁ when set
  int reference_line = 0;            ///< m_I whose detuning is pinned
  std::optional<double> detuning;    ///< rad/s; optimal_detuning when unset
};

/// Returns params with B₁ (if a saturation is requested) and ω_mw chosen so
/// that the reference line sits at the requested detuning.
SensorParams apply_operating_point(SensorParams params, const PhysicalConstants& constants,
                                   const OperatingPoint& point);

}  // namespace dqsim
