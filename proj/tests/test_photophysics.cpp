#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dqsim/errors.hpp"
#include "dqsim/numerics.hpp"
#include "dqsim/photophysics.hpp"

using namespace dqsim;

TEST_CASE("pumping rate from laser power") {
  CHECK(gamma1_from_power(1.8, 5e5) == doctest::Approx(9e5).epsilon(1e-15));
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  CHECK(gamma1_from_power(0.0, 5e5, 1e-3) == 1e-3);
  set_warning_sink(nullptr);
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(gamma1_from_power(-1.0, 5e5), ParameterError);
}

TEST_CASE("noiseless constant fluorescence") {
  const std::vector<double> p0(500, 1.0);
  const VoltageModel model{2.0, 0.7, 0.3, 1.5};
  const TimeTrace t = synthesize_voltages(p0, 100.0, 0.0, model, NoiseModel{});
  REQUIRE(t.size() == 500);
  REQUIRE(t.has_reference());
  for (std::size_t i = 0; i < t.size(); ++i) {
    REQUIRE(t.v1[i] == doctest::Approx(2.0 * (0.7 + 0.3)).epsilon(1e-15));
    REQUIRE(t.v2[i] == doctest::Approx(1.5).epsilon(1e-15));
  }
}

TEST_CASE("white noise variance") {
  const std::vector<double> p0(200000, 0.0);
  NoiseModel noise;
  noise.white_noise_density = 3e-6;
  noise.rng_seed = 11;
  const double fs = 1e4;
  const TimeTrace t = synthesize_voltages(p0, fs, 0.0, VoltageModel{}, noise);
  std::vector<double> dev(t.v1.begin(), t.v1.end());
  const double expected = 3e-6 * std::sqrt(fs / 2.0);
  CHECK(NoiseModel::sample_sigma(3e-6, fs) == doctest::Approx(expected));
  // Standard error of a sample standard deviation is σ/√(2n).
  const double sd = numerics::stddev(dev);
  CHECK(std::abs(sd - expected) < 3.0 * expected / std::sqrt(2.0 * dev.size()));
}

TEST_CASE("noise streams are reproducible") {
  const std::vector<double> p0(1000, 0.5);
  NoiseModel noise;
  noise.white_noise_density = 1e-6;
  noise.reference_noise_density = 1e-6;
  noise.drift_amplitude = 0.02;
  noise.rng_seed = 42;
  const auto a = synthesize_voltages(p0, 40.0, 0.0, VoltageModel{}, noise);
  const auto b = synthesize_voltages(p0, 40.0, 0.0, VoltageModel{}, noise);
  CHECK(a.v1 == b.v1);
  CHECK(a.v2 == b.v2);
  noise.rng_seed = 43;
  CHECK(synthesize_voltages(p0, 40.0, 0.0, VoltageModel{}, noise).v1 != a.v1);
}

TEST_CASE("drift correction") {
  const std::vector<double> p0(4000, 0.8);
  NoiseModel noise;
  noise.drift_amplitude = 0.05;
  noise.drift_corner_frequency = 0.5;
  noise.rng_seed = 3;
  const TimeTrace drifting = synthesize_voltages(p0, 40.0, 0.0, VoltageModel{}, noise);
  CHECK(numerics::stddev(drifting.v1) > 1e-3);
  const TimeTrace fixed = drift_correct(drifting);
  const double level = fixed.v1.front();
  for (double v : fixed.v1) REQUIRE(std::abs(v - level) < 1e-12 * level);

  const TimeTrace clean = synthesize_voltages(p0, 40.0, 0.0, VoltageModel{}, NoiseModel{});
  const TimeTrace same = drift_correct(clean);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    REQUIRE(std::abs(same.v1[i] - clean.v1[i]) <= 1e-12 * std::abs(clean.v1[i]));
  }
  const TimeTrace twice = drift_correct(fixed);
  for (std::size_t i = 0; i < fixed.size(); ++i) REQUIRE(twice.v1[i] == doctest::Approx(fixed.v1[i]).epsilon(1e-15));

  TimeTrace bad = clean;
  bad.v2[10] = 0.0;
  CHECK_THROWS_AS(drift_correct(bad), DataError);
}

TEST_CASE("trace validation and timestamps") {
  TimeTrace t;
  t.sample_rate = 10.0;
  t.v1 = {1.0, 2.0};
  t.v2 = {1.0};
  CHECK_THROWS_AS(t.validate(), DataError);
  const std::vector<double> good{0.0, 0.1, 0.2, 0.3};
  const TimeTrace ok = TimeTrace::from_timestamps(good, {1, 2, 3, 4});
  CHECK(ok.sample_rate == doctest::Approx(10.0));
  const std::vector<double> uneven{0.0, 0.1, 0.25, 0.3};
  CHECK_THROWS_AS(TimeTrace::from_timestamps(uneven, {1, 2, 3, 4}), DataError);
}

TEST_CASE("trace csv round trip") {
  const std::vector<double> p0{0.1, 0.2, 0.30000000000000004, 1.0 / 3.0};
  NoiseModel noise;
  noise.white_noise_density = 1e-3;
  noise.rng_seed = 5;
  const TimeTrace t = synthesize_voltages(p0, 40.0, 0.25, VoltageModel{}, noise);
  const auto path = std::filesystem::temp_directory_path() / "dqsim_trace_roundtrip.csv";
  write_trace_csv(path, t);
  const TimeTrace back = read_trace_csv(path);
  std::filesystem::remove(path);
  CHECK(back.v1 == t.v1);
  CHECK(back.v2 == t.v2);
  CHECK(back.sample_rate == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(back.start_time == doctest::Approx(0.25).epsilon(1e-12));
}
