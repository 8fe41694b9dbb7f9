#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "dqsim/errors.hpp"
#include "dqsim/numerics.hpp"
#include "dqsim/spectro.hpp"

using namespace dqsim;
using cd = std::complex<double>;

namespace {

// Σ_{n<N} e^{iθn}
cd geometric(double theta, std::size_t n) {
  const double nn = static_cast<double>(n);
  if (std::abs(std::sin(theta / 2.0)) < 1e-300) return cd(nn, 0.0);
  return std::polar(std::sin(nn * theta / 2.0) / std::sin(theta / 2.0), theta * (nn - 1.0) / 2.0);
}

// Single-sided, 2/N-scaled DFT bin k of a·cos(2πf t + φ) sampled at fs.
double dft_cosine_magnitude(double a, double f, double phi, double fs, std::size_t n, std::size_t k) {
  const double nu = f / fs, kn = static_cast<double>(k) / static_cast<double>(n);
  const cd x = 0.5 * a *
               (std::polar(1.0, phi) * geometric(2.0 * M_PI * (nu - kn), n) +
                std::polar(1.0, -phi) * geometric(-2.0 * M_PI * (nu + kn), n));
  return 2.0 * std::abs(x) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("on-bin sinusoid") {
  const TimeTrace t = sinusoid_trace(9.0, 0.4, 0.3, 40.0, 100.0);
  const Spectrum s = power_spectrum(t);
  REQUIRE(s.samples == 4000);
  CHECK(s.bin_spacing() == doctest::Approx(0.01));
  const std::size_t k0 = 900;
  CHECK(s.frequency[k0] == doctest::Approx(9.0));
  CHECK(s.magnitude[k0] == doctest::Approx(0.4).epsilon(1e-12));
  double worst = 0.0;
  for (std::size_t k = 0; k < s.magnitude.size(); ++k)
    if (k != k0) worst = std::max(worst, s.magnitude[k]);
  CHECK(worst <= 1e-10 * 0.4);
}

TEST_CASE("constant input lives in bin 0") {
  TimeTrace t;
  t.sample_rate = 10.0;
  t.v1.assign(256, 0.75);
  const Spectrum s = power_spectrum(t);
  CHECK(s.magnitude[0] == doctest::Approx(0.75).epsilon(1e-14));
  for (std::size_t k = 1; k < s.magnitude.size(); ++k) REQUIRE(s.magnitude[k] < 1e-14);
}

TEST_CASE("off-bin sinusoid follows the sampled closed form") {
  const double fs = 40.0, f = 9.0371, phi = 0.7, a = 0.2;
  const TimeTrace t = sinusoid_trace(f, a, phi, fs, 100.0);
  const Spectrum s = power_spectrum(t);
  for (std::size_t k = 880; k <= 920; ++k) {
    REQUIRE(std::abs(s.magnitude[k] - dft_cosine_magnitude(a, f, phi, fs, s.samples, k)) < 1e-6 * a);
  }
  // Near the middle of the band the image is negligible and the lobe is the
  // Dirichlet kernel |sin(πx)/(N sin(πx/N))| at offset x bins.
  const double fm = 10.0 + 0.37 / 100.0;
  const Spectrum m = power_spectrum(sinusoid_trace(fm, 1.0, 0.0, fs, 100.0));
  const auto n = static_cast<double>(m.samples);
  for (std::size_t k = 995; k <= 1005; ++k) {
    const double x = fm * 100.0 - static_cast<double>(k);
    const double dirichlet = std::abs(std::sin(M_PI * x) / (n * std::sin(M_PI * x / n)));
    REQUIRE(std::abs(m.magnitude[k] - dirichlet) < 1e-3);
  }
}

TEST_CASE("Parseval") {
  const TimeTrace t = sinusoid_trace(3.3, 1.0, 0.1, 40.0, 20.0, 0.05, 4);
  for (Window w : {Window::rectangular, Window::hann}) {
    const Spectrum s = power_spectrum(t, w);
    CHECK(s.windowed_power() == doctest::Approx(windowed_signal_power(t, w)).epsilon(1e-10));
  }
}

TEST_CASE("noiseless 9 Hz fit") {
  const Spectrum s = power_spectrum(sinusoid_trace(9.0, 1e-3, 0.2, 40.0, 100.0));
  const PeakFit fit = fit_peak(s, {8.0, 10.0});
  CHECK(std::abs(fit.center_frequency - 9.0) < 1e-6);
  CHECK(fit.linewidth == doctest::Approx(1.2067 / 100.0).epsilon(5e-4));
  CHECK(fit.amplitude == doctest::Approx(1e-3).epsilon(5e-3));
  CHECK(fit.sigma_frequency < 1e-8 * 9.0);
  CHECK(ideal_linewidth_bins(Window::rectangular, 4000) == doctest::Approx(1.2067).epsilon(1e-4));
  CHECK(ideal_linewidth_bins(Window::hann, 4000) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("off-bin fits") {
  for (Window w : {Window::rectangular, Window::hann}) {
    for (double f : {9.0024, 9.0037, 9.0050}) {
      const Spectrum s = power_spectrum(sinusoid_trace(f, 2e-3, 1.1, 40.0, 100.0), w);
      const PeakFit fit = fit_peak(s, {8.0, 10.0});
      CHECK(std::abs(fit.center_frequency - f) < 1e-6);
      CHECK(fit.amplitude == doctest::Approx(2e-3).epsilon(5e-3));
      CHECK(fit.width_scale == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("fit uncertainty matches the scatter") {
  std::vector<double> centers, sigmas;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Spectrum s = power_spectrum(sinusoid_trace(9.0, 1e-3, 0.0, 40.0, 100.0, 1e-4, seed));
    const PeakFit fit = fit_peak(s, {8.0, 10.0});
    centers.push_back(fit.center_frequency);
    sigmas.push_back(fit.sigma_frequency);
  }
  const double scatter = numerics::stddev(centers);
  CHECK(numerics::mean(sigmas) == doctest::Approx(scatter).epsilon(0.2));
  CHECK(std::abs(numerics::mean(centers) - 9.0) < 3.0 * scatter / 10.0);
}

TEST_CASE("Lorentzian width of a decaying line") {
  // a e^{-t/τ} cos(2πf t) has a Lorentzian of FWHM 1/(πτ).
  const double fs = 200.0, tau = 2.0, f = 30.0;
  TimeTrace t;
  t.sample_rate = fs;
  t.v1.resize(static_cast<std::size_t>(400 * fs));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double time = t.time(i);
    t.v1[i] = std::exp(-time / tau) * std::cos(2.0 * M_PI * f * time);
  }
  FitOptions options;
  options.line_shape = LineShape::lorentzian;
  options.half_width_bins = 200;
  const PeakFit fit = fit_peak(power_spectrum(t), {25.0, 35.0}, options);
  CHECK(fit.center_frequency == doctest::Approx(f).epsilon(1e-4));
  CHECK(fit.linewidth == doctest::Approx(1.0 / (M_PI * tau)).epsilon(0.05));
}

TEST_CASE("detection and data errors") {
  const Spectrum noise = power_spectrum(sinusoid_trace(9.0, 0.0, 0.0, 40.0, 100.0, 1e-3, 2));
  FitOptions strict;
  strict.dominance = 50.0;
  CHECK_THROWS_AS(fit_peak(noise, {8.0, 10.0}, strict), DetectionError);
  CHECK_THROWS_AS(fit_peak(noise, {10.0, 8.0}), ParameterError);
  TimeTrace tiny;
  tiny.sample_rate = 1.0;
  tiny.v1.assign(8, 1.0);
  CHECK_THROWS_AS(power_spectrum(tiny), DataError);
}

TEST_CASE("scaling laws on ideal sinusoids") {
  const TraceFactory quiet = [](double t, std::uint64_t) {
    return sinusoid_trace(9.0, 1e-3, 0.0, 40.0, t);
  };
  const TraceFactory noisy = [](double t, std::uint64_t seed) {
    return sinusoid_trace(9.0, 1e-3, 0.0, 40.0, t, 1e-4, seed);
  };
  ScalingOptions options;
  options.band = {8.0, 10.0};
  const ScalingStudy res = resolution_vs_time(quiet, {10, 30, 100, 300, 1000}, options);
  CHECK(res.slope == doctest::Approx(-1.0).epsilon(1e-3));
  for (const auto& p : res.points) CHECK(p.mean_sigma_frequency < 1e-8 * 9.0);

  options.seeds = 60;
  options.base_seed = 17;
  const ScalingStudy prec = precision_vs_time(noisy, {10, 30, 100, 300}, options);
  CHECK(std::abs(prec.slope + 1.5) < 0.15);
  CHECK(scaling_seed(17, 1, 2) == scaling_seed(17, 1, 2));
  CHECK(scaling_seed(17, 1, 2) != scaling_seed(17, 2, 1));

  options.seeds = 10;
  CHECK_THROWS_AS(precision_vs_time(noisy, {10, 30, 100}, options), ParameterError);
  CHECK_THROWS_AS(resolution_vs_time(quiet, {10, 20}, options), ParameterError);
}
