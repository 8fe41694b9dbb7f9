#include "dqsim/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dqsim/dynamics.hpp"
#include "dqsim/lockin.hpp"
#include "dqsim/numerics.hpp"
#include "dqsim/rng.hpp"
#include "dqsim/spectro.hpp"

namespace dqsim {

namespace {

// Sensor with the requested s, ΔT₂ and T₂ (Γ₁ fixed), m_I = 0.
Sensor dimensionless_sensor(double s, double delta_t2, double t2 = 2e-7, double g1 = 5e5) {
  const PhysicalConstants c;
  SensorParams p;
  p.amplitude_damping_rate = g1;
  p.dephasing_rate = dephasing_for_t2(t2, g1);
  p.drive_amplitude = drive_for_saturation(s, 1.0 / g1, t2, c);
  p.microwave_angular_frequency = transition_frequency(0.0, 0, c) - delta_t2 / t2;
  return Sensor(p, c);
}

SelfTestCheck check(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance};
}

}  // namespace

std::vector<SelfTestCheck> run_selftest(std::uint64_t seed) {
  std::vector<SelfTestCheck> out;
  auto rng = make_rng(seed, 0x5e1f);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double gamma = std::abs(PhysicalConstants{}.gyromagnetic_ratio);

  {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double s = 1e3 * unit(rng);
      const Sensor sensor = dimensionless_sensor(s, -10.0 + 20.0 * unit(rng));
      const double b = (-0.5 + unit(rng)) / (gamma * sensor.rates().t2);
      const auto a = steady_state_analytic(sensor, b).matrix();
      const auto n = steady_state_numeric(build_liouvillian(sensor, b)).matrix();
      worst = std::max(worst, (a - n).cwiseAbs().maxCoeff());
    }
    out.push_back(check("steady state analytic vs numeric (max element diff)", worst, 1e-10));
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const Sensor sensor = dimensionless_sensor(0.1 + 50.0 * unit(rng), -3.0 + 6.0 * unit(rng));
      const LinearResponse lr = linear_response(sensor);
      const double b = 0.02 / (gamma * sensor.rates().t2);
      const auto residual = [&](double bb) {
        return (steady_state_analytic(sensor, bb).matrix() - lr.rho0.matrix() - lr.kernel * bb)
            .norm();
      };
      worst = std::max(worst, std::abs(residual(b) / residual(0.5 * b) - 4.0));
    }
    out.push_back(check("linearization residual order (|ratio - 4|)", worst, 0.2));
  }

  {
    double worst = 0.0;
    for (double s : {0.1, 1.0, 10.0, 100.0}) {
      const double t2 = 2e-7;
      const double h = 1e-4 / (gamma * t2);
      const auto slope = [&](double delta) {
        const Sensor sensor = dimensionless_sensor(s, delta * t2, t2);
        return std::abs(p0_steady(sensor, h) - p0_steady(sensor, -h)) / (2.0 * h);
      };
      const double expect = std::sqrt(1.0 + s) / (std::sqrt(3.0) * t2);
      const double found = numerics::golden_section_maximize(slope, 0.3 * expect, 3.0 * expect, 1e-12);
      worst = std::max(worst, std::abs(found / expect - 1.0));
    }
    out.push_back(check("optimal detuning vs numeric argmax (relative)", worst, 1e-4));
  }

  {
    const Sensor sensor = dimensionless_sensor(15.79, 1.0);
    const double b = 0.1 / (gamma * sensor.rates().t2);
    const DriveField drive{b, 0.0, 0.0};
    const double t_end = 10.0 * std::max(sensor.rates().t1, sensor.rates().t2);
    const double step = max_integration_step(sensor, drive);
    const auto n = static_cast<std::size_t>(std::ceil(t_end / step));
    const TimeGrid grid{0.0, t_end / static_cast<double>(n), n + 1};
    const auto states = integrate_states(sensor, drive, grid, SpinState::excited());
    const auto target = steady_state_analytic(sensor, b).matrix();
    out.push_back(check("integrator distance to steady state after 10 max(T1,T2)",
                        (states.back().matrix() - target).norm(), 1e-8));
  }

  {
    const double f = 1e3, fs = 64e3, a = 0.25;
    TimeTrace trace{fs, 0.0, std::vector<double>(static_cast<std::size_t>(fs)), {}};
    for (std::size_t i = 0; i < trace.size(); ++i) {
      trace.v1[i] = a * std::cos(kTwoPi * f * trace.time(i) + 0.25 * std::numbers::pi);
    }
    const auto settled = settled_amplitude(trace, LockinConfig{f, 0.01, 4, 0.0});
    out.push_back(check("lock-in amplitude (relative)", std::abs(settled.amplitude / a - 1.0), 1e-3));
  }

  {
    std::normal_distribution<double> normal;
    TimeTrace trace{100.0, 0.0, std::vector<double>(1001), {}};
    for (double& v : trace.v1) v = normal(rng);
    double worst = 0.0;
    for (Window w : {Window::rectangular, Window::hann}) {
      const Spectrum s = power_spectrum(trace, w);
      worst = std::max(worst, std::abs(s.windowed_power() / windowed_signal_power(trace, w) - 1.0));
    }
    out.push_back(check("Parseval (relative)", worst, 1e-9));
  }

  {
    const TimeTrace trace = sinusoid_trace(9.0, 1e-3, 0.4, 40.0, 100.0);
    const PeakFit fit = fit_peak(power_spectrum(trace), {8.0, 10.0});
    out.push_back(check("noiseless 9 Hz centre error (Hz)", std::abs(fit.center_frequency - 9.0), 1e-6));
    out.push_back(check("noiseless FWHM*T vs 1.2067 (relative)",
                        std::abs(fit.linewidth * 100.0 / 1.2067 - 1.0), 5e-3));
  }

  {
    const Sensor sensor = dimensionless_sensor(15.79, 1.0);
    out.push_back(check("small-signal DC limit vs dP0/db (relative)",
                        std::abs(small_signal_transfer(sensor, 0.0).real() / p0_slope(sensor) - 1.0),
                        1e-9));
  }
  return out;
}

}  // namespace dqsim
