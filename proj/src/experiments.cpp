#include "dqsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dqsim/errors.hpp"
#include "dqsim/numerics.hpp"
#include "dqsim/rng.hpp"

namespace dqsim {

namespace {

constexpr double kHalfPower = 0.70710678118654752440;

SpinState start_state(const Sensor& sensor, double b) {
  if (sensor.params().intrinsic_relaxation_rate == 0.0) return steady_state_analytic(sensor, b);
  return steady_state_numeric(build_liouvillian(sensor, b));
}

std::size_t substeps_for(const Sensor& sensor, const DriveField& drive, double step) {
  const double limit = max_integration_step(sensor, drive);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(step / limit)));
}

double slowest_settling(const EnsembleSensor& sensor) {
  double t = 0.0;
  for (int m = -1; m <= 1; ++m) {
    if (sensor.weight(m) > 0.0) t = std::max(t, settling_time(sensor.member(m)));
  }
  return t;
}

bool use_quasi_static(const EnsembleSensor& sensor, double frequency, Propagation propagation) {
  if (propagation == Propagation::quasi_static) return true;
  if (propagation == Propagation::trajectory) return false;
  for (int m = -1; m <= 1; ++m) {
    if (sensor.weight(m) > 0.0 && frequency >= quasi_static_limit(sensor.member(m))) return false;
  }
  return true;
}

EnsembleSensor single(const Sensor& sensor) {
  HyperfineEnsemble e;
  e.weights = {0.0, 0.0, 0.0};
  e.weights[static_cast<std::size_t>(sensor.params().nuclear_projection + 1)] = 1.0;
  e.base = sensor.params();
  e.constants = sensor.constants();
  return EnsembleSensor(e);
}

}  // namespace

double settling_time(const Sensor& sensor) {
  return 10.0 * std::max(sensor.rates().t1, sensor.rates().t2);
}

double quasi_static_limit(const Sensor& sensor) {
  return 1.0 / (20.0 * std::max(sensor.rates().t1, sensor.rates().t2) * kTwoPi);
}

std::vector<double> simulate_p0(const EnsembleSensor& sensor, const DriveField& drive,
                                const TimeGrid& grid, Propagation propagation) {
  const double frequency = drive.angular_frequency / kTwoPi;
  std::vector<double> p0(grid.count, 0.0);
  const bool qs = use_quasi_static(sensor, frequency, propagation);
  for (int m = -1; m <= 1; ++m) {
    const double w = sensor.weight(m);
    if (w == 0.0) continue;
    const Sensor& member = sensor.member(m);
    if (qs) {
      const bool closed_form = member.params().intrinsic_relaxation_rate == 0.0;
      for (std::size_t i = 0; i < grid.count; ++i) {
        const double b = drive.at(grid.at(i));
        p0[i] += w * (closed_form ? p0_steady(member, b)
                                  : p0_of_state(steady_state_numeric(build_liouvillian(member, b))));
      }
    } else {
      const auto series =
          integrate_trajectory(member, drive, grid, start_state(member, drive.at(grid.start)),
                               substeps_for(member, drive, grid.step));
      for (std::size_t i = 0; i < grid.count; ++i) p0[i] += w * series[i];
    }
  }
  return p0;
}

AmplitudeMeasurement measure_amplitude(const EnsembleSensor& sensor, double frequency,
                                       double amplitude, const VoltageModel& voltage,
                                       const LockinSettings& lockin, Propagation propagation) {
  if (!(frequency > 0.0)) throw ParameterError("signal frequency must be positive");
  if (lockin.samples_per_period < 4) throw ConfigError("need at least 4 samples per period");
  const double fs = frequency * lockin.samples_per_period;
  const double tau = lockin.time_constant_periods / frequency;
  const bool qs = use_quasi_static(sensor, frequency, propagation);
  const double settle = qs ? 0.0 : slowest_settling(sensor);
  const double duration = settle + lockin.record_time_constants * tau;

  const DriveField drive{amplitude, angular(frequency), 0.0};
  const TimeGrid grid{0.0, 1.0 / fs, static_cast<std::size_t>(std::ceil(duration * fs)) + 1};
  const auto p0 = simulate_p0(sensor, drive, grid, qs ? Propagation::quasi_static
                                                      : Propagation::trajectory);
  const TimeTrace trace = synthesize_voltages(p0, fs, 0.0, voltage, NoiseModel{});
  const LockinConfig cfg{frequency, tau, lockin.filter_order, 0.0};
  const auto settled = settled_amplitude(trace, cfg, settle);
  return {settled.amplitude, settled.standard_error, qs};
}

// ---------------------------------------------------------------------------
// Bandwidth

Sensor bandwidth_sensor(const BandwidthSetup& setup, double amplitude_damping_rate) {
  if (!(amplitude_damping_rate > 0.0)) throw ParameterError("Γ1 must be positive");
  SensorParams p = setup.base;
  p.amplitude_damping_rate = amplitude_damping_rate;
  p.dephasing_rate = dephasing_for_t2(setup.t2_target, amplitude_damping_rate);
  if (p.dephasing_rate == 0.0) {
    warn("Γ1 exceeds 2/T2 target; dephasing clamped at 0, T2 is shorter than the target");
  }
  OperatingPoint op;
  op.saturation = setup.saturation;
  op.reference_line = p.nuclear_projection;
  op.detuning = setup.detuning;
  return Sensor(apply_operating_point(p, setup.constants, op), setup.constants);
}

double small_signal_bandwidth(const Sensor& sensor) {
  const double dc = std::abs(small_signal_transfer(sensor, 0.0));
  if (!(dc > 0.0)) throw DetectionError("sensor has no first-order response (zero detuning?)");
  const auto ratio = [&](double f) { return std::abs(small_signal_transfer(sensor, angular(f))) / dc; };
  const double fastest = 1.0 / std::min(sensor.rates().t1, sensor.rates().t2);
  double lo = 1e-4 * quasi_static_limit(sensor);
  double hi = lo;
  while (ratio(hi) >= kHalfPower) {
    lo = hi;
    hi *= 1.25;
    if (hi > 1e4 * fastest) throw DetectionError("small-signal response never falls to 1/√2");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = std::sqrt(lo * hi);
    (ratio(mid) >= kHalfPower ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

BandwidthResult measure_bandwidth(const BandwidthSetup& setup, double amplitude_damping_rate) {
  if (setup.frequencies.size() < 2) throw ParameterError("bandwidth grid needs two frequencies");
  if (!std::is_sorted(setup.frequencies.begin(), setup.frequencies.end())) {
    throw ParameterError("bandwidth grid must be ascending");
  }
  const Sensor sensor = bandwidth_sensor(setup, amplitude_damping_rate);
  const double linear_limit = 0.05 / (std::abs(setup.constants.gyromagnetic_ratio) * sensor.rates().t2);
  if (setup.field_amplitude > linear_limit) {
    std::ostringstream msg;
    msg << "b_ac = " << setup.field_amplitude << " T is outside the linear regime (limit "
        << linear_limit << " T)";
    throw ParameterError(msg.str());
  }
  const EnsembleSensor ens = single(sensor);

  BandwidthResult out;
  out.amplitude_damping_rate = amplitude_damping_rate;
  out.frequency = setup.frequencies;
  const auto cells = numerics::parallel_map(setup.frequencies.size(), [&](std::size_t i) {
    return measure_amplitude(ens, setup.frequencies[i], setup.field_amplitude, setup.voltage,
                             setup.lockin, Propagation::automatic);
  });
  for (const auto& c : cells) {
    out.amplitude.push_back(c.amplitude);
    out.quasi_static.push_back(c.quasi_static);
  }
  const double first = out.amplitude.front();
  if (!(first > 0.0)) throw DetectionError("no response at the lowest grid frequency");
  for (double a : out.amplitude) out.normalized.push_back(a / first);

  out.monotone = true;
  std::optional<std::size_t> crossing;
  for (std::size_t i = 1; i < out.normalized.size(); ++i) {
    if (out.normalized[i] > out.normalized[i - 1] + setup.monotone_tolerance) out.monotone = false;
    if (out.normalized[i - 1] >= kHalfPower && out.normalized[i] < kHalfPower) {
      ++out.crossings;
      if (!crossing) crossing = i;
    }
  }
  if (!crossing) {
    std::ostringstream msg;
    msg << "normalized amplitude never crosses 1/sqrt(2) on [" << out.frequency.front() << ", "
        << out.frequency.back() << "] Hz (ends at " << out.normalized.back()
        << "); extend the grid";
    throw DetectionError(msg.str());
  }
  const std::size_t i = *crossing;
  const double a0 = out.normalized[i - 1], a1 = out.normalized[i];
  const double l0 = std::log(out.frequency[i - 1]), l1 = std::log(out.frequency[i]);
  out.bandwidth = std::exp(l0 + (l1 - l0) * (a0 - kHalfPower) / (a0 - a1));
  out.small_signal_bandwidth = small_signal_bandwidth(sensor);
  return out;
}

std::vector<BandwidthResult> bandwidth_vs_rate(const BandwidthSetup& setup,
                                               const std::vector<double>& rates) {
  std::vector<BandwidthResult> out;
  for (double g1 : rates) out.push_back(measure_bandwidth(setup, g1));
  return out;
}

std::vector<BandwidthResult> bandwidth_sweep(const BandwidthSetup& setup,
                                             const std::vector<double>& powers, double kappa) {
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  std::vector<BandwidthResult> out;
  for (double power : powers) {
    if (!(power >= 0.0)) throw ParameterError("laser power must be non-negative");
    auto r = measure_bandwidth(setup, gamma1_from_power(power, kappa));
    r.laser_power = power;
    out.push_back(std::move(r));
  }
  return out;
}

double calibrate_kappa(const BandwidthSetup& setup, double power, double bandwidth) {
  if (!(power > 0.0 && bandwidth > 0.0)) {
    throw ParameterError("calibration power and bandwidth must be positive");
  }
  // The dephasing clamp caps usable rates at 2/T2.
  double lo = 1e2, hi = 1.99 / setup.t2_target;
  const auto f = [&](double g1) { return small_signal_bandwidth(bandwidth_sensor(setup, g1)); };
  if (f(lo) > bandwidth || f(hi) < bandwidth) {
    std::ostringstream msg;
    msg << "bandwidth " << bandwidth << " Hz is not reachable for Γ1 in [" << lo << ", " << hi
        << "] 1/s";
    throw ParameterError(msg.str());
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = std::sqrt(lo * hi);
    (f(mid) < bandwidth ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi) / power;
}

// ---------------------------------------------------------------------------
// Response curve, sensitivity and dynamic range

ResponseCurve response_curve(const EnsembleSensor& sensor, double frequency,
                             const std::vector<double>& field_amplitudes,
                             const VoltageModel& voltage, const LockinSettings& lockin,
                             Propagation propagation) {
  ResponseCurve curve;
  curve.frequency = frequency;
  curve.quasi_static = use_quasi_static(sensor, frequency, propagation);
  const auto cells = numerics::parallel_map(field_amplitudes.size(), [&](std::size_t i) {
    return measure_amplitude(sensor, frequency, field_amplitudes[i], voltage, lockin, propagation);
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    curve.points.push_back({field_amplitudes[i], cells[i].amplitude, cells[i].standard_error});
  }
  return curve;
}

double predicted_response_slope(const EnsembleSensor& sensor, const VoltageModel& voltage) {
  return voltage.gain * voltage.contrast * std::abs(sensor.slope());
}

// The floor is the rms amplitude of a spectral bin in a 1 s record (1 Hz
// bins), which for one-sided white density ν is √2·ν.
double noise_density_for_sensitivity(const EnsembleSensor& sensor, const VoltageModel& voltage,
                                     double sensitivity) {
  if (!(sensitivity >= 0.0)) throw ParameterError("target sensitivity must be non-negative");
  return sensitivity * predicted_response_slope(sensor, voltage) / std::sqrt(2.0);
}

SensitivityResult estimate_sensitivity(const EnsembleSensor& sensor, const VoltageModel& voltage,
                                       const NoiseModel& noise,
                                       const SensitivityOptions& options) {
  if (options.fit_grid.size() < 3) throw ParameterError("sensitivity fit needs three points");
  if (!(options.noise_sample_rate > 2.0 * options.frequency * (1.0 + options.band_fraction))) {
    throw ConfigError("noise record sample rate must exceed twice the top of the noise band");
  }
  SensitivityResult out;
  out.frequency = options.frequency;

  const ResponseCurve curve = response_curve(sensor, options.frequency, options.fit_grid, voltage,
                                             options.lockin, options.propagation);
  std::vector<double> x, y;
  for (const auto& p : curve.points) {
    x.push_back(p.field_amplitude);
    y.push_back(p.amplitude);
  }
  const auto fit = numerics::fit_proportional(x, y);
  out.fit_points = curve.points;
  out.slope = fit.slope;
  out.slope_sigma = fit.slope_sigma;
  out.relative_residual = fit.relative_residual;
  if (!(fit.slope > 0.0)) throw FitError("response slope is not positive; no linear response");
  if (fit.relative_residual > options.max_relative_residual) {
    std::ostringstream msg;
    msg << "response is not linear on the fit grid (relative residual " << fit.relative_residual
        << " > " << options.max_relative_residual << "); shrink the grid";
    throw FitError(msg.str());
  }

  // Signal-free record through the measurement chain.
  const double fs = options.noise_sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(options.noise_record_length * fs));
  const std::vector<double> p0(n, sensor.p0(0.0));
  TimeTrace trace = synthesize_voltages(p0, fs, 0.0, voltage, noise);
  if (trace.has_reference()) trace = drift_correct(trace);
  const Spectrum spectrum = power_spectrum(scope(trace, LockinConfig{}));
  double acc = 0.0;
  std::size_t bins = 0;
  for (std::size_t k = 1; k + 1 < spectrum.magnitude.size(); ++k) {
    const double f = spectrum.frequency[k];
    if (std::abs(f - options.frequency) <= options.band_fraction * options.frequency) {
      acc += spectrum.magnitude[k] * spectrum.magnitude[k];
      ++bins;
    }
  }
  if (bins < 10) throw InsufficientDataError("noise band holds fewer than ten bins");
  out.noise_bins = bins;
  out.noise_floor = std::sqrt(acc / static_cast<double>(bins) * spectrum.record_length);
  out.noise_floor_sigma = out.noise_floor / (2.0 * std::sqrt(static_cast<double>(bins)));

  out.minimum_field = out.noise_floor / out.slope;
  const double rel_k = out.slope_sigma / out.slope;
  const double rel_floor = out.noise_floor_sigma / (out.noise_floor > 0.0 ? out.noise_floor : 1.0);
  out.minimum_field_sigma = out.minimum_field * std::hypot(rel_k, rel_floor);
  out.sensitivity = out.minimum_field;
  out.below_numerical_floor = out.noise_floor <= 1e-12 * voltage.gain;
  return out;
}

std::vector<double> response_peaks(const ResponseCurve& curve, double min_prominence) {
  std::vector<double> y;
  for (const auto& p : curve.points) y.push_back(p.amplitude);
  if (y.empty()) throw DetectionError("empty response curve");
  const double top = *std::max_element(y.begin(), y.end());
  const auto idx = numerics::local_maxima(y, min_prominence * top);
  std::vector<double> peaks;
  for (std::size_t i : idx) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    const auto& c = curve.points[i + 1];
    peaks.push_back(numerics::parabolic_vertex(a.field_amplitude, a.amplitude, b.field_amplitude,
                                               b.amplitude, c.field_amplitude, c.amplitude));
  }
  if (peaks.empty()) {
    std::ostringstream msg;
    msg << "response curve up to " << curve.points.back().field_amplitude
        << " T shows no saturation peak; extend the grid";
    throw DetectionError(msg.str());
  }
  return peaks;
}

DynamicRangeResult estimate_dynamic_range(const ResponseCurve& curve,
                                          const SensitivityResult& sensitivity,
                                          double min_prominence) {
  DynamicRangeResult out;
  out.frequency = curve.frequency;
  out.peaks = response_peaks(curve, min_prominence);
  out.maximum_field = out.peaks.front();
  out.minimum_field = sensitivity.minimum_field;
  out.dynamic_range = out.minimum_field > 0.0
                          ? 20.0 * std::log10(out.maximum_field / out.minimum_field)
                          : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// Spectral scaling

TimeTrace campaign_trace(const ScalingCampaignSetup& setup, double record_length,
                         std::uint64_t seed) {
  const EnsembleSensor sensor(setup.sensor);
  const auto n = static_cast<std::size_t>(std::llround(record_length * setup.sample_rate));
  const TimeGrid grid{0.0, 1.0 / setup.sample_rate, n};
  const auto p0 = simulate_p0(sensor, setup.drive, grid, setup.propagation);
  NoiseModel noise = setup.noise;
  noise.rng_seed = seed;
  TimeTrace trace = synthesize_voltages(p0, setup.sample_rate, 0.0, setup.voltage, noise);
  if (trace.has_reference()) trace = drift_correct(trace);
  return scope(trace, LockinConfig{});
}

ScalingReport scaling_campaign(const ScalingCampaignSetup& setup,
                               const ScalingCampaignOptions& options) {
  ScalingOptions so;
  so.band = setup.band;
  so.fit = setup.fit;
  so.window = setup.window;
  so.base_seed = options.base_seed;

  ScalingReport report;
  ScalingCampaignSetup quiet = setup;
  quiet.noise.white_noise_density = 0.0;
  quiet.noise.reference_noise_density = 0.0;
  so.seeds = 1;
  report.resolution_noiseless = resolution_vs_time(
      [&](double t, std::uint64_t seed) { return campaign_trace(quiet, t, seed); },
      options.resolution_lengths, so);

  const TraceFactory noisy = [&](double t, std::uint64_t seed) {
    return campaign_trace(setup, t, seed);
  };
  so.seeds = options.resolution_seeds;
  so.base_seed = substream_seed(options.base_seed, 1);
  report.resolution = resolution_vs_time(noisy, options.resolution_lengths, so);
  so.seeds = options.precision_seeds;
  so.base_seed = substream_seed(options.base_seed, 2);
  report.precision = precision_vs_time(noisy, options.precision_lengths, so);
  return report;
}

}  // namespace dqsim
