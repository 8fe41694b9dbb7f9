#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dqsim/errors.hpp"
#include "dqsim/model.hpp"

using namespace dqsim;

namespace {

SensorParams resonant(double gamma1 = 5e5, double gamma2 = 4.75e6) {
  SensorParams p;
  p.amplitude_damping_rate = gamma1;
  p.dephasing_rate = gamma2;
  p.drive_amplitude = 1.0 / 28e3;
  p.microwave_angular_frequency = transition_frequency(0.0, 0, PhysicalConstants{});
  return p;
}

}  // namespace

TEST_CASE("derived rates") {
  const Sensor sensor(resonant());
  CHECK(sensor.rates().t1 == doctest::Approx(2e-6).epsilon(1e-14));
  CHECK(sensor.rates().t2 == doctest::Approx(2e-7).epsilon(1e-14));
  // (2π·1e6)²·2e-6·2e-7
  const double w = 2.0 * M_PI * 1e6;
  CHECK(sensor.rates().saturation == doctest::Approx(w * w * 2e-6 * 2e-7).epsilon(1e-12));
  CHECK(sensor.rates().saturation == doctest::Approx(15.79).epsilon(1e-3));
  CHECK(sensor.rates().detuning == doctest::Approx(0.0));
}

TEST_CASE("zero drive gives zero saturation") {
  SensorParams p = resonant();
  p.drive_amplitude = 0.0;
  CHECK(Sensor(p).rates().saturation == 0.0);
}

TEST_CASE("T2 of 200 ns from the rate split") {
  const Sensor sensor(resonant(1e6, 4.5e6));
  CHECK(sensor.rates().t2 == doctest::Approx(2e-7).epsilon(1e-14));
  CHECK(dephasing_for_t2(2e-7, 1e6) == doctest::Approx(4.5e6).epsilon(1e-14));
}

TEST_CASE("parameter domain") {
  SensorParams p = resonant();
  p.amplitude_damping_rate = 0.0;
  CHECK_THROWS_AS(Sensor{p}, ParameterError);
  p.amplitude_damping_rate = -1.0;
  CHECK_THROWS_AS(Sensor{p}, ParameterError);
  p = resonant();
  p.dephasing_rate = -1.0;
  CHECK_THROWS_AS(Sensor{p}, ParameterError);
  p = resonant();
  p.nuclear_projection = 2;
  CHECK_THROWS_AS(Sensor{p}, ParameterError);
  CHECK_THROWS_AS(transition_frequency(0.0, -2, PhysicalConstants{}), ParameterError);
}

TEST_CASE("transition frequencies") {
  const PhysicalConstants c;
  CHECK(transition_frequency(0.0, 0, c) == doctest::Approx(2.0 * M_PI * 2.87e9).epsilon(1e-15));
  const double split = transition_frequency(0.0, 1, c) - transition_frequency(0.0, -1, c);
  CHECK(split == doctest::Approx(-2.0 * M_PI * 4.32e6).epsilon(1e-9));
  // γ_e < 0, so a positive field raises ω_e.
  const double shift = transition_frequency(1e-3, 0, c) - transition_frequency(0.0, 0, c);
  CHECK(shift == doctest::Approx(2.0 * M_PI * 28e6).epsilon(1e-9));
}

TEST_CASE("optimal detuning closed form") {
  DerivedRates r;
  r.t2 = 2e-7;
  r.saturation = 0.0;
  CHECK(optimal_detuning(r) == doctest::Approx(2.887e6).epsilon(1e-3));
  CHECK(optimal_detuning(r) == doctest::Approx(1.0 / (std::sqrt(3.0) * 2e-7)).epsilon(1e-14));
  r.saturation = 15.79;
  CHECK(optimal_detuning(r) == doctest::Approx(1.183e7).epsilon(1e-3));
}

TEST_CASE("drive for saturation round trip") {
  const PhysicalConstants c;
  for (double s : {0.1, 2.0, 15.79, 300.0}) {
    SensorParams p = resonant();
    p.drive_amplitude = drive_for_saturation(s, 2e-6, 2e-7, c);
    CHECK(Sensor(p, c).rates().saturation == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("operating point pins the reference line") {
  const PhysicalConstants c;
  SensorParams p = resonant();
  OperatingPoint op;
  op.saturation = 2.0;
  op.reference_line = 1;
  p = apply_operating_point(p, c, op);
  SensorParams member = p;
  member.nuclear_projection = 1;
  const Sensor s(member, c);
  CHECK(s.rates().saturation == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.rates().detuning == doctest::Approx(optimal_detuning(s.rates())).epsilon(1e-9));

  op.detuning = 3e6;
  member = apply_operating_point(p, c, op);
  member.nuclear_projection = 1;
  CHECK(Sensor(member, c).rates().detuning == doctest::Approx(3e6).epsilon(1e-9));
}

TEST_CASE("hyperfine ensemble members") {
  HyperfineEnsemble e;
  e.base = resonant();
  CHECK(e.member(1).rates().detuning - e.member(-1).rates().detuning ==
        doctest::Approx(-2.0 * M_PI * 4.32e6).epsilon(1e-9));
  e.weights = {0.5, 0.6, 0.0};
  CHECK_THROWS_AS(e.validate(), ParameterError);
}

TEST_CASE("drive field") {
  DriveField d{2e-9, 2.0 * M_PI * 9.0, 0.3};
  CHECK(d.at(0.0) == doctest::Approx(2e-9 * std::cos(0.3)));
  CHECK(d.at(1.0 / 9.0) == doctest::Approx(2e-9 * std::cos(0.3)));
}
