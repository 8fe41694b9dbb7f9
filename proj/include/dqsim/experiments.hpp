#pragma once

// End-to-end virtual experiments: bandwidth against pumping rate, the
// saturation response curve, sensitivity, dynamic range and the spectral
// scaling campaign. Frequencies in this header are in Hz unless named
// angular.

#include <cstdint>
#include <optional>
#include <vector>

#include "dqsim/dynamics.hpp"
#include "dqsim/lockin.hpp"
#include "dqsim/photophysics.hpp"
#include "dqsim/spectro.hpp"

namespace dqsim {

/// How P₀(t) is obtained for a drive.
enum class Propagation {
  automatic,     ///< quasi-static below the fast-path limit, integration above
  quasi_static,  ///< closed-form steady state evaluated at every sample
  trajectory,    ///< RK4 integration of the master equation
};

/// 10·max(T₁, T₂): the time allowed for the sensor to forget its initial state.
double settling_time(const Sensor& sensor);

/// 1/(20·max(T₁,T₂)·2π), in Hz. Below it the sensor tracks b(t) adiabatically.
double quasi_static_limit(const Sensor& sensor);

/// Σ_m w_m P₀,m(t) on the grid, each member started from its steady state at
/// b(grid.start).
std::vector<double> simulate_p0(const EnsembleSensor& sensor, const DriveField& drive,
                                const TimeGrid& grid, Propagation propagation);

/// Lock-in settings for amplitude measurements, expressed relative to the
/// signal period so one setting serves any f_ac.
struct LockinSettings {
  double time_constant_periods = 10.0;  ///< τ·f_ac
  int filter_order = 4;
  double record_time_constants = 30.0;  ///< record length after settling, in τ
  int samples_per_period = 32;
};

struct AmplitudeMeasurement {
  double amplitude = 0.0;       ///< settled R, V
  double standard_error = 0.0;  ///< V
  bool quasi_static = false;
};

/// Noise-free settled lock-in amplitude of v₁ for b(t) = b_ac cos(2πf t).
AmplitudeMeasurement measure_amplitude(const EnsembleSensor& sensor, double frequency,
                                       double amplitude, const VoltageModel& voltage,
                                       const LockinSettings& lockin, Propagation propagation);

// ---------------------------------------------------------------------------
// Bandwidth

/// A sensor template swept over pumping rates at fixed saturation and T₂.
struct BandwidthSetup {
  SensorParams base;  ///< B₀, m_I; Γ₁, Γ₂, B₁ and ω_mw are replaced per rate
  PhysicalConstants constants;
  double saturation = 2.0;
  double t2_target = 2e-7;          ///< s
  std::optional<double> detuning;   ///< rad/s; optimal when unset
  double field_amplitude = 1e-7;    ///< b_ac, T
  std::vector<double> frequencies;  ///< ascending grid, Hz
  VoltageModel voltage;
  LockinSettings lockin;
  /// Allowed rise between neighbouring normalized amplitudes before the
  /// curve counts as non-monotone (lock-in ripple and integration error).
  double monotone_tolerance = 1e-3;
};

/// Sensor at pumping rate Γ₁ for the setup.
Sensor bandwidth_sensor(const BandwidthSetup& setup, double amplitude_damping_rate);

struct BandwidthResult {
  double laser_power = 0.0;  ///< W; 0 when the sweep was given rates
  double amplitude_damping_rate = 0.0;
  std::vector<double> frequency;  ///< Hz
  std::vector<double> amplitude;  ///< V
  std::vector<double> normalized;
  std::vector<bool> quasi_static;
  double bandwidth = 0.0;            ///< f at normalized amplitude 1/√2, Hz
  double small_signal_bandwidth = 0.0;  ///< same from the linearized response
  std::size_t crossings = 0;         ///< downward crossings of 1/√2
  bool monotone = false;
};

/// -3 dB frequency of |small_signal_transfer| (Hz), located by bisection.
double small_signal_bandwidth(const Sensor& sensor);

/// Measures one curve. Throws DetectionError, listing the end values, when
/// the grid never reaches 1/√2.
BandwidthResult measure_bandwidth(const BandwidthSetup& setup, double amplitude_damping_rate);

std::vector<BandwidthResult> bandwidth_vs_rate(const BandwidthSetup& setup,
                                               const std::vector<double>& rates);

/// Γ₁ = κ·P for each power, then as bandwidth_vs_rate.
std::vector<BandwidthResult> bandwidth_sweep(const BandwidthSetup& setup,
                                             const std::vector<double>& powers, double kappa);

/// κ such that the small-signal bandwidth at `power` equals `bandwidth`.
double calibrate_kappa(const BandwidthSetup& setup, double power, double bandwidth);

// ---------------------------------------------------------------------------
// Response curve, sensitivity and dynamic range

struct ResponsePoint {
  double field_amplitude = 0.0;  ///< b_ac, T
  double amplitude = 0.0;        ///< v₁ₘ, V
  double standard_error = 0.0;
};

struct ResponseCurve {
  double frequency = 0.0;  ///< Hz
  bool quasi_static = false;
  std::vector<ResponsePoint> points;
};

ResponseCurve response_curve(const EnsembleSensor& sensor, double frequency,
                             const std::vector<double>& field_amplitudes,
                             const VoltageModel& voltage, const LockinSettings& lockin,
                             Propagation propagation = Propagation::automatic);

/// Lock-in slope predicted by the first-order theory: α·c₁·|Σ w ∂P₀/∂b|, V/T.
double predicted_response_slope(const EnsembleSensor& sensor, const VoltageModel& voltage);

/// White-noise density on v₁ at which the sensitivity equals `sensitivity`
/// (T/√Hz) under the convention of estimate_sensitivity.
double noise_density_for_sensitivity(const EnsembleSensor& sensor, const VoltageModel& voltage,
                                     double sensitivity);

struct SensitivityOptions {
  double frequency = 2e3;        ///< f_ac, Hz
  std::vector<double> fit_grid;  ///< b_ac values for the linear fit, T
  double max_relative_residual = 0.02;
  double noise_record_length = 1.0;  ///< s
  double noise_sample_rate = 2e4;    ///< Hz
  double band_fraction = 0.5;        ///< floor averaged over f_ac·(1 ± fraction)
  LockinSettings lockin;
  Propagation propagation = Propagation::automatic;
};

struct SensitivityResult {
  double frequency = 0.0;
  double slope = 0.0;  ///< k, V/T
  double slope_sigma = 0.0;
  double relative_residual = 0.0;
  double noise_floor = 0.0;  ///< rms bin amplitude in a 1 Hz bandwidth, V
  double noise_floor_sigma = 0.0;
  std::size_t noise_bins = 0;
  double minimum_field = 0.0;  ///< b_min = floor/k, T
  double minimum_field_sigma = 0.0;
  double sensitivity = 0.0;  ///< T/√Hz (b_min for a 1 s, 1 Hz measurement)
  bool below_numerical_floor = false;
  std::vector<ResponsePoint> fit_points;
};

/// Linear fit v₁ₘ = k·b_ac on the fit grid and the noise floor from a
/// signal-free record through the full chain (voltages, drift correction,
/// spectrum). Throws FitError when the fit residual exceeds the limit.
SensitivityResult estimate_sensitivity(const EnsembleSensor& sensor, const VoltageModel& voltage,
                                       const NoiseModel& noise,
                                       const SensitivityOptions& options);

struct DynamicRangeResult {
  double frequency = 0.0;
  double maximum_field = 0.0;  ///< b_max, abscissa of the first peak, T
  double minimum_field = 0.0;  ///< b_min, T
  double dynamic_range = 0.0;  ///< dB
  std::vector<double> peaks;   ///< all peak abscissae, T
};

/// Peaks with prominence below `min_prominence` × the curve maximum are
/// ignored. Throws DetectionError when the curve has no peak.
std::vector<double> response_peaks(const ResponseCurve& curve, double min_prominence = 1e-3);

DynamicRangeResult estimate_dynamic_range(const ResponseCurve& curve,
                                          const SensitivityResult& sensitivity,
                                          double min_prominence = 1e-3);

// ---------------------------------------------------------------------------
// Spectral scaling

struct ScalingCampaignSetup {
  HyperfineEnsemble sensor;
  DriveField drive;  ///< the detected field; angular frequency in rad/s
  VoltageModel voltage;
  NoiseModel noise;  ///< rng_seed is ignored; seeds come from the study
  double sample_rate = 40.0;
  Window window = Window::rectangular;
  FrequencyBand band;
  FitOptions fit;
  Propagation propagation = Propagation::automatic;
};

/// Full chain for one record: dynamics, voltages with noise and drift,
/// drift correction and oscilloscope mode.
TimeTrace campaign_trace(const ScalingCampaignSetup& setup, double record_length,
                         std::uint64_t seed);

struct ScalingReport {
  ScalingStudy resolution_noiseless;
  ScalingStudy resolution;
  ScalingStudy precision;
};

struct ScalingCampaignOptions {
  std::vector<double> resolution_lengths;  ///< s
  std::size_t resolution_seeds = 8;
  std::vector<double> precision_lengths;  ///< s
  std::size_t precision_seeds = 100;
  std::uint64_t base_seed = 0;
};

ScalingReport scaling_campaign(const ScalingCampaignSetup& setup,
                               const ScalingCampaignOptions& options);

}  // namespace dqsim
