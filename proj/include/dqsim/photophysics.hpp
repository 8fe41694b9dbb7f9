#pragma once

// Spin populations to photodiode voltages, laser drift and its cancellation.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dqsim {

/// Uniformly sampled photodiode record. v2 (laser reference) may be empty.
struct TimeTrace {
  double sample_rate = 1.0;  ///< Hz
  double start_time = 0.0;   ///< s
  std::vector<double> v1;    ///< fluorescence channel, V
  std::vector<double> v2;    ///< laser reference channel, V

  std::size_t size() const noexcept { return v1.size(); }
  double duration() const { return static_cast<double>(v1.size()) / sample_rate; }
  double time(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
  bool has_reference() const noexcept { return !v2.empty(); }
  /// Throws DataError on a non-positive rate or mismatched channel lengths.
  void validate() const;

  /// Builds a trace from explicit timestamps; throws DataError unless the
  /// spacing is uniform to 1e-9 of a sample period.
  static TimeTrace from_timestamps(std::span<const double> times, std::vector<double> v1,
                                   std::vector<double> v2 = {});
};

/// v₁ = α(c₀ + c₁P₀)·d(t), v₂ = v₂₀·d(t), d the common laser drift factor.
struct VoltageModel {
  double gain = 1.0;             ///< α, V
  double offset = 0.7;           ///< c₀
  double contrast = 0.3;         ///< c₁ ∈ (0, 1]
  double reference_level = 1.0;  ///< v₂₀, V

  void validate() const;
  double fluorescence(double p0) const { return gain * (offset + contrast * p0); }
};

struct NoiseModel {
  double white_noise_density = 0.0;      ///< v₁ channel, V/√Hz (one-sided)
  double reference_noise_density = 0.0;  ///< v₂ channel, V/√Hz
  double drift_amplitude = 0.0;          ///< relative rms of d(t) − 1
  double drift_corner_frequency = 0.01;  ///< Hz
  std::uint64_t rng_seed = 0;

  void validate() const;
  /// Per-sample standard deviation of white noise with one-sided density
  /// `density` at `sample_rate`: density·√(f_s/2).
  static double sample_sigma(double density, double sample_rate);
};

/// Γ₁ = κ·P. Zero power yields `floor` (with a warning) so the steady state
/// stays unique.
double gamma1_from_power(double laser_power, double kappa, double floor = 1e-3);

/// Synthesizes both photodiode channels for the P₀ samples. The drift factor
/// is 1 + a·u(t) with u a unit-variance first-order low-pass (Ornstein-
/// Uhlenbeck) random walk at the drift corner frequency. Deterministic for a
/// fixed seed.
TimeTrace synthesize_voltages(std::span<const double> p0, double sample_rate, double start_time,
                              const VoltageModel& model, const NoiseModel& noise);

/// v₁' = v₁·mean(v₂)/v₂; the reference channel of the result is flat at
/// mean(v₂), so correcting twice equals correcting once.
TimeTrace drift_correct(const TimeTrace& trace);

/// CSV with header `time_s,v1_V,v2_V` (v2 column empty when absent).
void write_trace_csv(const std::filesystem::path& path, const TimeTrace& trace);
TimeTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace dqsim
