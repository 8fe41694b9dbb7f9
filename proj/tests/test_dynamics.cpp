#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dqsim/dynamics.hpp"
#include "dqsim/errors.hpp"

using namespace dqsim;

namespace {

const PhysicalConstants kC;

// Sensor with T1 = 2 µs, T2 = 200 ns, saturation s and detuning Δ (rad/s).
Sensor make(double s, double detuning, double gamma1 = 5e5) {
  SensorParams p;
  p.amplitude_damping_rate = gamma1;
  p.dephasing_rate = 1.0 / 2e-7 - gamma1 / 2.0;
  const double t1 = 1.0 / gamma1;
  p.drive_amplitude = std::sqrt(s / (t1 * 2e-7)) / std::abs(kC.gyromagnetic_ratio);
  p.microwave_angular_frequency = transition_frequency(0.0, 0, kC) - detuning;
  return Sensor(p, kC);
}

double max_diff(const Matrix2c& a, const Matrix2c& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("hamiltonian") {
  CHECK(hamiltonian(make(0.0, 0.0), 0.0).cwiseAbs().maxCoeff() == 0.0);
  const Sensor s = make(2.0, 1e7);
  const Matrix2c h0 = hamiltonian(s, 0.0);
  CHECK(h0(0, 0).real() == doctest::Approx(0.5e7));
  CHECK(h0(1, 1).real() == doctest::Approx(-0.5e7));
  // γ_e·b = Δ puts the line on resonance.
  const Matrix2c h1 = hamiltonian(s, 1e7 / kC.gyromagnetic_ratio);
  CHECK(std::abs(h1(0, 0)) < 1e-6);
  CHECK(std::abs(h1(1, 1)) < 1e-6);
  CHECK(max_diff(h1, h1.adjoint()) == 0.0);
}

TEST_CASE("undriven steady state is the pumped level") {
  const Sensor s = make(0.0, 3e6);
  const SpinState n = steady_state_numeric(build_liouvillian(s, 0.0));
  CHECK(std::abs(n.matrix()(kGround, kGround) - 1.0) < 1e-14);
  CHECK(std::abs(n.matrix()(kExcited, kExcited)) < 1e-14);
  const SpinState a = steady_state_analytic(s, 0.0);
  CHECK(a.matrix()(kGround, kGround).real() == 1.0);
  CHECK(p0_steady(s, 0.0) == 1.0);
}

TEST_CASE("numeric and analytic steady states agree") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> us(0.0, 1e3), ud(-10.0, 10.0), ub(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const double s = us(rng), dt = ud(rng), gb = ub(rng);
    const Sensor sensor = make(s, dt / 2e-7);
    const double b = gb / (kC.gyromagnetic_ratio * 2e-7);
    const SpinState n = steady_state_numeric(build_liouvillian(sensor, b));
    const SpinState a = steady_state_analytic(sensor, b);
    REQUIRE(max_diff(n.matrix(), a.matrix()) < 1e-10);
    CHECK(p0_steady(sensor, b) == doctest::Approx(p0_of_state(a)).epsilon(1e-13));
  }
}

TEST_CASE("resonant saturation populations") {
  // ρ₁₁ = s/(2(1+s)) for the excited level on resonance.
  const Sensor s = make(15.79, 0.0);
  const SpinState a = steady_state_analytic(s, 0.0);
  CHECK(a.matrix()(kExcited, kExcited).real() == doctest::Approx(15.79 / (2.0 * 16.79)).epsilon(1e-12));
  CHECK(a.matrix()(kExcited, kExcited).real() == doctest::Approx(0.4702).epsilon(1e-4));
  CHECK(p0_of_state(a) == doctest::Approx(0.5298).epsilon(1e-4));
  // Same point reached through the field instead of the microwave.
  const Sensor off = make(15.79, 2e6);
  const SpinState shifted = steady_state_numeric(build_liouvillian(off, 2e6 / kC.gyromagnetic_ratio));
  CHECK(max_diff(shifted.matrix(), a.matrix()) < 1e-12);

  const Sensor strong = make(1e6, 0.0);
  CHECK(std::abs(steady_state_numeric(build_liouvillian(strong, 0.0)).matrix()(kExcited, kExcited).real() -
                 0.5) < 1e-5);
}

TEST_CASE("degenerate null space") {
  std::vector<Matrix2c> none;
  CHECK_THROWS_AS(steady_state_numeric(build_liouvillian(Matrix2c::Zero(), none)),
                  SingularSystemError);
  std::vector<Matrix2c> dephasing{0.5 * pauli::z()};
  CHECK_THROWS_AS(steady_state_numeric(build_liouvillian(Matrix2c::Zero(), dephasing)),
                  SingularSystemError);
}

TEST_CASE("state helpers") {
  CHECK(p0_of_state(SpinState::ground()) == 1.0);
  CHECK(p0_of_state(SpinState::maximally_mixed()) == 0.5);
  const SpinState r = SpinState::from_bloch(Eigen::Vector3d(0.3, -0.2, 0.5));
  CHECK((r.bloch() - Eigen::Vector3d(0.3, -0.2, 0.5)).norm() < 1e-15);
  CHECK(r.is_physical());
  CHECK(!SpinState::from_bloch(Eigen::Vector3d(0.0, 0.0, 1.5)).is_physical());
  const Matrix2c rho = r.matrix();
  CHECK((unvectorize(vectorize(rho)) - rho).norm() == 0.0);
  // Column stacking.
  CHECK(vectorize(rho)(1) == rho(1, 0));
}

TEST_CASE("first-order response") {
  const Sensor zero = make(15.79, 0.0);
  const LinearResponse lr0 = linear_response(zero);
  CHECK(std::abs(lr0.kernel(0, 0)) < 1e-300);
  CHECK(std::abs(lr0.kernel(1, 1)) < 1e-300);
  CHECK(p0_slope(zero) == 0.0);
  CHECK(p0_linear(zero, 1e-9) == doctest::Approx(p0_steady(zero, 0.0)));

  const Sensor s = make(15.79, 1.183e7);
  const double h = 1e-5 / 2e-7 / std::abs(kC.gyromagnetic_ratio);
  const double fd = (p0_steady(s, h) - p0_steady(s, -h)) / (2.0 * h);
  CHECK(p0_slope(s) == doctest::Approx(fd).epsilon(1e-6));
  CHECK(std::abs(small_signal_transfer(s, 0.0) - Complex(p0_slope(s), 0.0)) <
        1e-9 * std::abs(p0_slope(s)));

  // Residual of the linearization is second order in b.
  const double b = 0.02 / (std::abs(kC.gyromagnetic_ratio) * 2e-7);
  auto residual = [&](double bb) {
    const Matrix2c lin = linear_response(s).rho0.matrix() + linear_response(s).kernel * bb;
    return (steady_state_analytic(s, bb).matrix() - lin).norm();
  };
  CHECK(residual(b) / residual(b / 2.0) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("small-signal response rolls off") {
  const Sensor s = make(2.0, 1e7);
  const double dc = std::abs(small_signal_transfer(s, 0.0));
  CHECK(std::abs(small_signal_transfer(s, 2.0 * M_PI * 1e8)) < 0.05 * dc);
}

TEST_CASE("integrator reaches the steady state") {
  const Sensor s = make(15.79, 1.183e7);
  const DriveField none{};
  const double step = max_integration_step(s, none);
  const auto count = static_cast<std::size_t>(std::ceil(10.0 * 2e-6 / step)) + 1;
  const auto states = integrate_states(s, none, TimeGrid{0.0, step, count}, SpinState::excited());
  const SpinState target = steady_state_analytic(s, 0.0);
  CHECK(max_diff(states.back().matrix(), target.matrix()) < 1e-8);
  for (const auto& st : states) {
    REQUIRE(std::abs(st.trace_real() - 1.0) < 1e-12);
    REQUIRE(st.min_eigenvalue() > -1e-9);
  }
}

TEST_CASE("integrator order") {
  // Halving the step cuts the error by about 16.
  const Sensor s = make(2.0, 8e6);
  const DriveField none{};
  const double t_end = 2e-6;
  auto run = [&](std::size_t n) {
    return integrate_trajectory(s, none, TimeGrid{0.0, t_end / static_cast<double>(n), n + 1},
                                SpinState::excited())
        .back();
  };
  const double ref = run(4096);
  const double n0 = std::ceil(t_end / max_integration_step(s, none));
  const double e1 = std::abs(run(static_cast<std::size_t>(n0)) - ref);
  const double e2 = std::abs(run(static_cast<std::size_t>(2 * n0)) - ref);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("step bound is enforced") {
  const Sensor s = make(2.0, 8e6);
  const DriveField none{};
  const double step = max_integration_step(s, none);
  try {
    integrate_trajectory(s, none, TimeGrid{0.0, 3.0 * step, 10}, SpinState::ground());
    FAIL("expected StepSizeError");
  } catch (const StepSizeError& e) {
    CHECK(e.required_step() == doctest::Approx(step));
  }
  CHECK_NOTHROW(integrate_trajectory(s, none, TimeGrid{0.0, 3.0 * step, 10}, SpinState::ground(), 3));
}

TEST_CASE("ensemble averages") {
  HyperfineEnsemble e;
  e.base = make(2.0, 5e6).params();
  PhysicalConstants flat;
  flat.hyperfine_coupling = 0.0;
  e.constants = flat;
  e.weights = {0.2, 0.5, 0.3};
  const Sensor single(e.base, flat);
  CHECK(ensemble_p0(e, 1e-6, ResponseMode::analytic) == doctest::Approx(p0_steady(single, 1e-6)));

  e.constants = kC;
  e.weights = {1.0, 0.0, 0.0};
  const EnsembleSensor es(e);
  CHECK(es.p0(2e-6) == doctest::Approx(p0_steady(e.member(-1), 2e-6)).epsilon(1e-14));
  CHECK(es.slope() == doctest::Approx(p0_slope(e.member(-1))).epsilon(1e-14));
}
