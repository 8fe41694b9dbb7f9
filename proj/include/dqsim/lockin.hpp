#pragma once

// Digital dual-phase lock-in amplifier.

#include <filesystem>
#include <vector>

#include "dqsim/photophysics.hpp"

namespace dqsim {

struct LockinConfig {
  double reference_frequency = 0.0;  ///< Hz
  double time_constant = 0.0;        ///< s; 0 selects oscilloscope mode
  int filter_order = 4;              ///< cascaded first-order stages, 1..8
  double reference_phase = 0.0;      ///< rad

  void validate() const;
};

/// `order` identical first-order exponential smoothers with time constant τ.
class LowPassCascade {
 public:
  LowPassCascade(int order, double time_constant, double sample_rate);

  void reset(double value);
  double step(double input);

 private:
  double alpha_;
  std::vector<double> state_;
};

struct DemodOutput {
  double sample_rate = 1.0;
  double start_time = 0.0;
  std::vector<double> x;      ///< in-phase, V
  std::vector<double> y;      ///< quadrature, V
  std::vector<double> r;      ///< √(X² + Y²), V
  std::vector<double> theta;  ///< atan2(Y, X), rad

  std::size_t size() const noexcept { return x.size(); }
  double time(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
};

/// X = LPF[2v·cos(2πf_ref t + θ_ref)], Y = LPF[−2v·sin(2πf_ref t + θ_ref)]
/// on v₁, with t the absolute sample time. For v = a·cos(2πf_ref t + φ) the
/// outputs settle to R = a, θ = φ − θ_ref. Filters start from zero.
DemodOutput demodulate(const TimeTrace& trace, const LockinConfig& config);

/// Oscilloscope mode: with zero time constant and zero reference frequency
/// the instrument passes v₁ through untouched.
TimeTrace scope(const TimeTrace& trace, const LockinConfig& config);

struct SettledAmplitude {
  double amplitude = 0.0;       ///< mean settled R, cut to whole periods
  double standard_error = 0.0;  ///< from eight block means of that window
};

/// Relative step-response residual the settled window waits for.
inline constexpr double kFilterResidual = 1e-4;

/// Time for the filter cascade's step response to come within
/// kFilterResidual of its final value (≈ 15.9τ for four stages).
double filter_settling_time(int order, double time_constant);

/// Mean R over the final third of the record, or over the part after the
/// filter and sensor have settled when that is shorter. Requires at least
/// filter_settling_time + sensor_settling + 2τ of record.
SettledAmplitude settled_amplitude(const TimeTrace& trace, const LockinConfig& config,
                                   double sensor_settling = 0.0);

void write_demod_csv(const std::filesystem::path& path, const DemodOutput& out);

}  // namespace dqsim
