#pragma once

// Run configuration. Everything here is in user units (Hz, Tesla, seconds);
// conversion to angular frequencies happens when the library objects are
// built.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dqsim/experiments.hpp"

namespace dqsim {

struct RunConfig {
  std::uint64_t seed = 0;

  struct Constants {
    double zero_field_splitting_hz = 2.87e9;
    double gyromagnetic_ratio_hz_per_t = -28e9;
    double hyperfine_coupling_hz = -2.16e6;
  } constants;

  struct Sensor {
    double static_field_t = 0.0;
    double drive_amplitude_t = 1.0 / 28e3;  // |γ_e|B₁ = 2π·1 MHz
    std::optional<double> saturation;       // replaces drive_amplitude_t
    double amplitude_damping_rate = 5e5;
    double dephasing_rate = 4.75e6;
    std::optional<double> t2_target_s;  // replaces dephasing_rate
    int nuclear_projection = 0;
    int reference_line = 0;
    std::optional<double> detuning_hz;  // optimal when unset
    double intrinsic_relaxation_rate = 0.0;
    std::array<double, 3> hyperfine_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  } sensor;

  struct Drive {
    double amplitude_t = 1e-8;
    double frequency_hz = 9.0;
    double phase_rad = 0.0;
  } drive;

  struct Voltage {
    double gain = 1.0;
    double offset = 0.7;
    double contrast = 0.3;
    double reference_level = 1.0;
  } voltage;

  struct Noise {
    double white_noise_density = 1e-7;
    double reference_noise_density = 0.0;
    double drift_amplitude = 0.01;
    double drift_corner_frequency_hz = 0.01;
  } noise;

  struct Lockin {
    double time_constant_periods = 10.0;
    int filter_order = 4;
    double record_time_constants = 30.0;
    int samples_per_period = 32;
  } lockin;

  struct Trace {
    double sample_rate_hz = 40.0;
    double duration_s = 100.0;
    std::string propagation = "automatic";
  } trace;

  struct SpectrumSection {
    std::string window = "rectangular";
    std::string line_shape = "windowed_sinusoid";
    double band_low_hz = 8.0;
    double band_high_hz = 10.0;
    int half_width_bins = 4;
  } spectrum;

  struct Scaling {
    std::vector<double> resolution_lengths_s{10, 20, 50, 100, 200, 500, 1000};
    int resolution_seeds = 8;
    std::vector<double> precision_lengths_s{10, 20, 50, 100, 200, 300};
    int precision_seeds = 100;
    std::optional<double> snr = 10.0;  // amplitude / noise density, √Hz
  } scaling;

  struct Bandwidth {
    double saturation = 2.0;
    double t2_target_s = 2e-7;
    double amplitude_t = 1e-7;
    double frequency_min_hz = 100.0;
    double frequency_max_hz = 1e7;
    int points = 41;
    std::vector<double> gamma1{1e5, 3e5, 1e6, 3e6};
    std::vector<double> powers_w;
    std::optional<double> kappa;  // calibrated to the anchor when unset
    double anchor_power_w = 1.8;
    double anchor_bandwidth_hz = 146e3;
    double monotone_tolerance = 1e-3;
  } bandwidth;

  struct Response {
    double frequency_hz = 2e3;
    double saturation = 0.1;
    int reference_line = 1;
    double max_field_t = 2.5e-4;
    int points = 501;
    double min_prominence = 1e-3;
    double fit_max_t = 2e-7;
    int fit_points = 8;
    double max_relative_residual = 0.02;
    double noise_record_s = 1.0;
    double noise_sample_rate_hz = 2e4;
    double band_fraction = 0.5;
    std::optional<double> equivalent_sensitivity = 1e-9;  // T/√Hz; sets the noise
    std::string propagation = "automatic";
  } response;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses a JSON document. Missing keys keep their defaults, unknown keys
/// and type mismatches throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies `section.key=value` (value parsed as JSON, else taken as a
/// string) to the JSON form and re-parses.
RunConfig apply_overrides(const RunConfig& config, const std::vector<std::string>& overrides);

/// Canonical JSON of every resolved value; parse_config(echo) reproduces
/// the configuration exactly.
std::string config_echo(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// Library objects built from a configuration.
PhysicalConstants make_constants(const RunConfig& config);
/// Sensor parameters with the operating point of the sensor section applied.
SensorParams make_sensor_params(const RunConfig& config);
HyperfineEnsemble make_ensemble(const RunConfig& config);
/// Ensemble at the response experiment's operating point.
HyperfineEnsemble make_response_ensemble(const RunConfig& config);
DriveField make_drive(const RunConfig& config);
VoltageModel make_voltage(const RunConfig& config);
NoiseModel make_noise(const RunConfig& config);
LockinSettings make_lockin(const RunConfig& config);
Propagation parse_propagation(const std::string& name);
Window parse_window(const std::string& name);
LineShape parse_line_shape(const std::string& name);
FitOptions make_fit_options(const RunConfig& config);
BandwidthSetup make_bandwidth_setup(const RunConfig& config);
ScalingCampaignSetup make_scaling_setup(const RunConfig& config);
ScalingCampaignOptions make_scaling_options(const RunConfig& config);
SensitivityOptions make_sensitivity_options(const RunConfig& config);

}  // namespace dqsim
