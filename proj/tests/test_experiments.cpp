#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dqsim/config.hpp"
#include "dqsim/errors.hpp"
#include "dqsim/experiments.hpp"
#include "dqsim/numerics.hpp"

using namespace dqsim;

namespace {

const PhysicalConstants kC;

Sensor detuned_sensor(double s, double gamma1 = 5e5) {
  SensorParams p;
  p.amplitude_damping_rate = gamma1;
  p.dephasing_rate = dephasing_for_t2(2e-7, gamma1);
  OperatingPoint op;
  op.saturation = s;
  return Sensor(apply_operating_point(p, kC, op), kC);
}

EnsembleSensor one_line(const Sensor& s) {
  HyperfineEnsemble e;
  e.base = s.params();
  e.constants = s.constants();
  const int m = s.params().nuclear_projection;
  e.weights = {m == -1 ? 1.0 : 0.0, m == 0 ? 1.0 : 0.0, m == 1 ? 1.0 : 0.0};
  return EnsembleSensor(e);
}

BandwidthSetup small_bandwidth_setup() {
  BandwidthSetup b;
  b.constants = kC;
  b.frequencies = numerics::logspace(1e3, 1e7, 21);
  return b;
}

}  // namespace

TEST_CASE("settling and quasi-static limits") {
  const Sensor s = detuned_sensor(2.0);
  CHECK(settling_time(s) == doctest::Approx(10.0 * 2e-6));
  CHECK(quasi_static_limit(s) == doctest::Approx(1.0 / (20.0 * 2e-6 * 2.0 * M_PI)));
}

TEST_CASE("quasi-static and integrated P0 agree when slow") {
  const EnsembleSensor e = one_line(detuned_sensor(2.0));
  const double f = 0.5 * quasi_static_limit(e.member(0));
  const DriveField drive{1e-7, 2.0 * M_PI * f, 0.0};
  const TimeGrid grid{0.0, 1.0 / (32.0 * f), 64};
  const auto qs = simulate_p0(e, drive, grid, Propagation::quasi_static);
  const auto rk = simulate_p0(e, drive, grid, Propagation::trajectory);
  const double swing = *std::max_element(qs.begin(), qs.end()) - *std::min_element(qs.begin(), qs.end());
  for (std::size_t i = 0; i < qs.size(); ++i) REQUIRE(std::abs(qs[i] - rk[i]) < 0.02 * swing);
}

TEST_CASE("low-frequency lock-in amplitude matches the linear slope") {
  const EnsembleSensor e = one_line(detuned_sensor(2.0));
  const VoltageModel v;
  const double b = 1e-8;
  const auto m = measure_amplitude(e, 2e3, b, v, LockinSettings{}, Propagation::automatic);
  CHECK(m.quasi_static);
  // α·c₁·|∂P₀/∂b|·b
  CHECK(m.amplitude == doctest::Approx(v.gain * v.contrast * std::abs(p0_slope(e.member(0))) * b).epsilon(1e-3));
  CHECK(predicted_response_slope(e, v) == doctest::Approx(v.gain * v.contrast * std::abs(e.slope())));
}

TEST_CASE("measured bandwidth tracks the small-signal bandwidth") {
  const BandwidthSetup setup = small_bandwidth_setup();
  const BandwidthResult r = measure_bandwidth(setup, 1e6);
  CHECK(r.crossings == 1);
  CHECK(r.monotone);
  CHECK(r.normalized.front() == 1.0);
  CHECK(r.bandwidth == doctest::Approx(r.small_signal_bandwidth).epsilon(0.02));
  CHECK(r.small_signal_bandwidth == doctest::Approx(small_signal_bandwidth(bandwidth_sensor(setup, 1e6))));
  CHECK(bandwidth_sensor(setup, 1e6).rates().t2 == doctest::Approx(2e-7));
  CHECK(bandwidth_sensor(setup, 1e6).rates().saturation == doctest::Approx(2.0));
}

TEST_CASE("small-signal bandwidth grows with pumping") {
  const BandwidthSetup setup = small_bandwidth_setup();
  double previous = 0.0;
  for (double g : {1e5, 3e5, 1e6, 3e6}) {
    const double bw = small_signal_bandwidth(bandwidth_sensor(setup, g));
    CHECK(bw > previous);
    previous = bw;
  }
  const double kappa = calibrate_kappa(setup, 1.8, 146e3);
  CHECK(small_signal_bandwidth(bandwidth_sensor(setup, kappa * 1.8)) == doctest::Approx(146e3).epsilon(1e-6));
}

TEST_CASE("bandwidth grid without a crossing") {
  BandwidthSetup setup = small_bandwidth_setup();
  setup.frequencies = numerics::logspace(1e2, 1e3, 5);
  CHECK_THROWS_AS(measure_bandwidth(setup, 1e6), DetectionError);
}

TEST_CASE("response curve, sensitivity and dynamic range") {
  RunConfig c;
  const EnsembleSensor sensor(make_response_ensemble(c));
  const VoltageModel v = make_voltage(c);
  const auto grid = numerics::linspace(0.0, 2.5e-4, 501);
  const ResponseCurve curve = response_curve(sensor, 2e3, grid, v, LockinSettings{});
  CHECK(curve.quasi_static);
  const auto peaks = response_peaks(curve);
  REQUIRE(peaks.size() == 3);
  const double spacing = std::abs(kC.hyperfine_coupling / kC.gyromagnetic_ratio);
  CHECK(spacing == doctest::Approx(77.14e-6).epsilon(1e-3));
  CHECK(peaks[1] - peaks[0] == doctest::Approx(spacing).epsilon(0.1));
  CHECK(peaks[2] - peaks[1] == doctest::Approx(spacing).epsilon(0.1));

  NoiseModel noise = make_noise(c);
  noise.white_noise_density = noise_density_for_sensitivity(sensor, v, 1e-9);
  const SensitivityOptions options = make_sensitivity_options(c);
  const SensitivityResult sens = estimate_sensitivity(sensor, v, noise, options);
  CHECK(sens.sensitivity == doctest::Approx(1e-9).epsilon(0.2));
  CHECK(sens.relative_residual < 0.02);
  CHECK(sens.slope == doctest::Approx(predicted_response_slope(sensor, v)).epsilon(0.01));

  const DynamicRangeResult dr = estimate_dynamic_range(curve, sens);
  CHECK(dr.maximum_field == doctest::Approx(peaks[0]));
  CHECK(dr.dynamic_range == doctest::Approx(20.0 * std::log10(peaks[0] / sens.minimum_field)));
  CHECK(dr.dynamic_range >= 80.0);

  NoiseModel silent = noise;
  silent.white_noise_density = 0.0;
  silent.reference_noise_density = 0.0;
  CHECK(estimate_sensitivity(sensor, v, silent, options).below_numerical_floor);

  SensitivityOptions wide = options;
  wide.fit_grid = numerics::linspace(5e-6, 4e-5, 8);
  CHECK_THROWS_AS(estimate_sensitivity(sensor, v, noise, wide), FitError);

  ResponseCurve short_curve = curve;
  short_curve.points.resize(20);
  CHECK_THROWS_AS(response_peaks(short_curve), DetectionError);
}

TEST_CASE("campaign traces are deterministic") {
  RunConfig c;
  const ScalingCampaignSetup setup = make_scaling_setup(c);
  const TimeTrace a = campaign_trace(setup, 10.0, 5);
  const TimeTrace b = campaign_trace(setup, 10.0, 5);
  CHECK(a.v1 == b.v1);
  CHECK(a.size() == 400);
  CHECK(campaign_trace(setup, 10.0, 6).v1 != a.v1);
}
