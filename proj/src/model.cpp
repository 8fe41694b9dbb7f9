#include "dqsim/model.hpp"

#include <cmath>
#include <string>

#include "dqsim/errors.hpp"

namespace dqsim {

namespace {
void check_projection(int m_I) {
  if (m_I < -1 || m_I > 1) {
    throw ParameterError("nuclear projection m_I must be -1, 0 or +1 (got " +
                         std::to_string(m_I) + ")");
  }
}
}  // namespace

void SensorParams::validate() const {
  if (!(amplitude_damping_rate > 0.0) || !std::isfinite(amplitude_damping_rate)) {
    throw ParameterError("amplitude damping rate Gamma1 must be positive and finite");
  }
  if (!(dephasing_rate >= 0.0) || !std::isfinite(dephasing_rate)) {
    throw ParameterError("dephasing rate Gamma2 must be non-negative and finite");
  }
  if (!(drive_amplitude >= 0.0) || !std::isfinite(drive_amplitude)) {
    throw ParameterError("drive amplitude B1 must be non-negative and finite");
  }
  if (!(intrinsic_relaxation_rate >= 0.0)) {
    throw ParameterError("intrinsic relaxation rate must be non-negative");
  }
  if (!std::isfinite(static_field) || !std::isfinite(microwave_angular_frequency)) {
    throw ParameterError("static field and microwave frequency must be finite");
  }
  check_projection(nuclear_projection);
}

double DriveField::at(double t) const {
  return amplitude * std::cos(angular_frequency * t + phase);
}

double transition_frequency(double static_field, int nuclear_projection,
                            const PhysicalConstants& constants) {
  check_projection(nuclear_projection);
  return constants.zero_field_splitting - constants.gyromagnetic_ratio * static_field +
         nuclear_projection * constants.hyperfine_coupling;
}

DerivedRates derive_rates(const SensorParams& params, const PhysicalConstants& constants) {
  params.validate();
  DerivedRates r;
  r.t1 = 1.0 / params.amplitude_damping_rate;
  r.t2 = 1.0 / (params.dephasing_rate + 0.5 * params.amplitude_damping_rate);
  const double rabi = constants.gyromagnetic_ratio * params.drive_amplitude;
  r.saturation = rabi * rabi * r.t1 * r.t2;
  r.detuning = transition_frequency(params.static_field, params.nuclear_projection, constants) -
               params.microwave_angular_frequency;
  return r;
}

double optimal_detuning(const DerivedRates& rates) {
  if (!(rates.t2 > 0.0)) throw ParameterError("T2 must be positive");
  return std::sqrt(1.0 + rates.saturation) / (std::sqrt(3.0) * rates.t2);
}

Sensor::Sensor(const SensorParams& params, const PhysicalConstants& constants)
    : params_(params), constants_(constants), rates_(derive_rates(params, constants)) {}

Sensor Sensor::with_nuclear_projection(int m_I) const {
  SensorParams p = params_;
  p.nuclear_projection = m_I;
  return Sensor(p, constants_);
}

void HyperfineEnsemble::validate() const {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("hyperfine weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ParameterError("hyperfine weights must sum to 1");
  }
  SensorParams p = base;
  p.nuclear_projection = 0;
  p.validate();
}

Sensor HyperfineEnsemble::member(int m_I) const {
  SensorParams p = base;
  p.nuclear_projection = m_I;
  return Sensor(p, constants);
}

double drive_for_saturation(double saturation, double t1, double t2,
                            const PhysicalConstants& constants) {
  if (!(saturation >= 0.0)) throw ParameterError("saturation must be non-negative");
  if (!(t1 > 0.0 && t2 > 0.0)) throw ParameterError("T1 and T2 must be positive");
  return std::sqrt(saturation / (t1 * t2)) / std::abs(constants.gyromagnetic_ratio);
}

double dephasing_for_t2(double t2_target, double amplitude_damping_rate) {
  if (!(t2_target > 0.0)) throw ParameterError("target T2 must be positive");
  const double g2 = 1.0 / t2_target - 0.5 * amplitude_damping_rate;
  return g2 > 0.0 ? g2 : 0.0;
}

SensorParams apply_operating_point(SensorParams params, const PhysicalConstants& constants,
                                   const OperatingPoint& point) {
  if (point.saturation) {
    params.validate();
    const double t1 = 1.0 / params.amplitude_damping_rate;
    const double t2 = 1.0 / (params.dephasing_rate + 0.5 * params.amplitude_damping_rate);
    params.drive_amplitude = drive_for_saturation(*point.saturation, t1, t2, constants);
  }
  SensorParams ref = params;
  ref.nuclear_projection = point.reference_line;
  ref.microwave_angular_frequency = 0.0;
  const DerivedRates rates = derive_rates(ref, constants);
  const double detuning = point.detuning ? *point.detuning : optimal_detuning(rates);
  params.microwave_angular_frequency =
      transition_frequency(params.static_field, point.reference_line, constants) - detuning;
  return params;
}

}  // namespace dqsim
