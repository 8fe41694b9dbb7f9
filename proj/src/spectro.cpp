#include "dqsim/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <fftw3.h>

#include "dqsim/errors.hpp"
#include "dqsim/model.hpp"
#include "dqsim/numerics.hpp"
#include "dqsim/rng.hpp"

namespace dqsim {

namespace {

using Complex = std::complex<double>;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> window_weights(Window window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (window == Window::hann) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
    }
  }
  return w;
}

// One-sided scale: interior bins carry both the positive and negative
// frequency halves.
double side_factor(std::size_t k, std::size_t n) {
  return (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
}

// Σ_{n<N} e^{2πi n x/N} for real x, in bins.
Complex rect_kernel(double x, std::size_t samples) {
  const double n = static_cast<double>(samples);
  const double pi = std::numbers::pi;
  const Complex rotation = std::polar(1.0, pi * x * (n - 1.0) / n);
  const double den = std::sin(pi * x / n);
  if (std::abs(den) < 1e-12) {
    return rotation * (n * std::cos(pi * x) / std::cos(pi * x / n));
  }
  return rotation * (std::sin(pi * x) / den);
}

Complex window_kernel(Window window, double x, std::size_t samples) {
  if (window == Window::rectangular) return rect_kernel(x, samples);
  return 0.5 * rect_kernel(x, samples) - 0.25 * rect_kernel(x + 1.0, samples) -
         0.25 * rect_kernel(x - 1.0, samples);
}

struct FitRegion {
  std::vector<std::size_t> bins;
  std::size_t peak = 0;
};

FitRegion select_region(const Spectrum& spectrum, FrequencyBand band, const FitOptions& options) {
  if (!(band.high > band.low)) throw ParameterError("search band must have high > low");
  const std::size_t last = spectrum.magnitude.size();
  std::vector<std::size_t> in_band;
  for (std::size_t k = 1; k < last; ++k) {
    const double f = spectrum.frequency[k];
    if (f >= band.low && f <= band.high) in_band.push_back(k);
  }
  if (in_band.size() < 3) throw DetectionError("search band holds fewer than three bins");
  std::size_t peak = in_band.front();
  for (std::size_t k : in_band) {
    if (spectrum.magnitude[k] > spectrum.magnitude[peak]) peak = k;
  }
  std::vector<double> mags;
  for (std::size_t k : in_band) mags.push_back(spectrum.magnitude[k]);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2),
                   mags.end());
  const double median = mags[mags.size() / 2];
  if (!(spectrum.magnitude[peak] > 0.0) ||
      spectrum.magnitude[peak] < options.dominance * median) {
    std::ostringstream msg;
    msg << "no dominant peak in [" << band.low << ", " << band.high << "] Hz (peak "
        << spectrum.magnitude[peak] << " vs median " << median << ")";
    throw DetectionError(msg.str());
  }
  FitRegion region;
  region.peak = peak;
  const auto half = static_cast<std::ptrdiff_t>(options.half_width_bins);
  for (std::ptrdiff_t d = -half; d <= half; ++d) {
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(peak) + d;
    if (k < 1 || k >= static_cast<std::ptrdiff_t>(last)) continue;
    if (side_factor(static_cast<std::size_t>(k), spectrum.samples) != 2.0) continue;
    region.bins.push_back(static_cast<std::size_t>(k));
  }
  return region;
}

// Generic Levenberg-Marquardt on a real residual vector with numeric
// Jacobian. `valid` rejects parameter vectors outside the model's domain.
struct LmProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;  // data − model
  std::function<bool(const Eigen::VectorXd&)> valid;
  Eigen::VectorXd steps;  // finite-difference steps
  double cost_floor = 0.0;  // exact fit at working precision below this
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  double cost = 0.0;
  int iterations = 0;
};

Eigen::MatrixXd numeric_jacobian(const LmProblem& problem, const Eigen::VectorXd& p) {
  const Eigen::VectorXd r0 = problem.residual(p);
  Eigen::MatrixXd j(r0.size(), p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd hi = p, lo = p;
    hi(i) += problem.steps(i);
    lo(i) -= problem.steps(i);
    // Jacobian of the model, i.e. minus that of the residual.
    j.col(i) = -(problem.residual(hi) - problem.residual(lo)) / (2.0 * problem.steps(i));
  }
  return j;
}

LmResult levenberg_marquardt(const LmProblem& problem, Eigen::VectorXd p, int max_iterations) {
  Eigen::VectorXd r = problem.residual(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  for (; it < max_iterations; ++it) {
    const Eigen::MatrixXd j = numeric_jacobian(problem, p);
    const Eigen::MatrixXd a = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * a.diagonal().cwiseMax(1e-300);
      const Eigen::VectorXd delta = damped.ldlt().solve(g);
      const Eigen::VectorXd trial = p + delta;
      if (delta.allFinite() && problem.valid(trial)) {
        const Eigen::VectorXd r_trial = problem.residual(trial);
        const double trial_cost = r_trial.squaredNorm();
        if (trial_cost < cost) {
          const double improvement = cost - trial_cost;
          const bool small_step =
              (delta.array().abs() <= 1e-12 * (p.array().abs() + 1e-6)).all();
          p = trial;
          r = r_trial;
          cost = trial_cost;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          if (small_step || improvement <= 1e-15 * (cost + improvement) || cost <= problem.cost_floor) {
            converged = true;
          }
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) converged = true;  // no descent direction left at working precision
    if (converged || cost <= problem.cost_floor) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "peak fit did not converge in " << max_iterations << " iterations (cost " << cost
        << ")";
    throw FitError(msg.str());
  }
  const Eigen::MatrixXd j = numeric_jacobian(problem, p);
  const auto dof = static_cast<double>(r.size() - p.size());
  const Eigen::MatrixXd info = j.transpose() * j;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (!lu.isInvertible()) throw FitError("peak fit covariance is singular");
  return {p, lu.inverse() * (cost / dof), cost, it + 1};
}

double wrap_phase(double phi) {
  return std::remainder(phi, kTwoPi);
}

}  // namespace

double Spectrum::windowed_power() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < magnitude.size(); ++k) {
    const double c = side_factor(k, samples);
    acc += magnitude[k] * magnitude[k] / (c * c) * (c == 2.0 ? 2.0 : 1.0);
  }
  return acc * window_sum * window_sum / static_cast<double>(samples);
}

double windowed_signal_power(const TimeTrace& trace, Window window) {
  const auto w = window_weights(window, trace.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) acc += (w[i] * trace.v1[i]) * (w[i] * trace.v1[i]);
  return acc;
}

Spectrum power_spectrum(const TimeTrace& trace, Window window) {
  trace.validate();
  const std::size_t n = trace.size();
  if (n < 16) throw DataError("spectrum needs at least 16 samples");
  const auto w = window_weights(window, n);

  Spectrum s;
  s.samples = n;
  s.sample_rate = trace.sample_rate;
  s.record_length = trace.duration();
  s.window = window;
  s.window_sum = 0.0;
  for (double v : w) s.window_sum += v;

  const std::size_t bins = n / 2 + 1;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) in[i] = w[i] * trace.v1[i];
  fftw_execute(plan);

  s.frequency.resize(bins);
  s.magnitude.resize(bins);
  s.bins.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const Complex x(out[k][0], out[k][1]);
    s.frequency[k] = static_cast<double>(k) / s.record_length;
    s.bins[k] = x * (side_factor(k, n) / s.window_sum);
    s.magnitude[k] = std::abs(s.bins[k]);
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return s;
}

double ideal_linewidth_bins(Window window, std::size_t samples) {
  const double peak = std::abs(window_kernel(window, 0.0, samples));
  double lo = 0.0;
  double hi = window == Window::rectangular ? 1.0 : 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::abs(window_kernel(window, mid, samples)) > 0.5 * peak) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + hi;  // twice the half-width at half maximum
}

PeakFit fit_peak(const Spectrum& spectrum, FrequencyBand band, const FitOptions& options) {
  if (options.half_width_bins < 2) throw ParameterError("fit needs at least two bins per side");
  const FitRegion region = select_region(spectrum, band, options);
  const std::size_t n = spectrum.samples;
  const double t = spectrum.record_length;
  const auto& bins = region.bins;
  const auto m = static_cast<Eigen::Index>(bins.size());
  const std::size_t k0 = region.peak;
  double energy = 0.0;
  for (std::size_t k : bins) energy += std::norm(spectrum.bins[k]);
  // FFT roundoff scales with the whole record (DC level included), not just the line.
  const double eps = std::numeric_limits<double>::epsilon();
  const double cost_floor = 1e-26 * energy + 2.0 * static_cast<double>(bins.size()) * 16.0 * eps *
                                                 eps * spectrum.windowed_power() /
                                                 (spectrum.window_sum * spectrum.window_sum);

  // Start from the parabolic vertex of the magnitudes around the peak.
  const double ym = spectrum.magnitude[k0 - 1];
  const double y0 = spectrum.magnitude[k0];
  const double yp = k0 + 1 < spectrum.magnitude.size() ? spectrum.magnitude[k0 + 1] : 0.0;
  double x_start = numerics::parabolic_vertex(-1.0, ym, 0.0, y0, 1.0, yp);
  if (!std::isfinite(x_start)) x_start = 0.0;
  x_start = std::clamp(x_start, -0.5, 0.5) + static_cast<double>(k0);

  PeakFit fit;
  if (options.line_shape == LineShape::windowed_sinusoid) {
    const Window window = spectrum.window;
    const double scale = 1.0 / spectrum.window_sum;  // interior bins: factor 2 × a/2
    auto model = [&](const Eigen::VectorXd& p, std::size_t k) {
      const double a = p(0), phi = p(1), x0 = p(2), w = p(3);
      const double kk = static_cast<double>(k);
      const Complex pos = window_kernel(window, (x0 - kk) / w, n);
      const Complex neg = window_kernel(window, -x0 - kk, n);  // image keeps the ideal shape
      return a * scale * (std::polar(1.0, phi) * pos + std::polar(1.0, -phi) * neg);
    };
    LmProblem problem;
    problem.residual = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(2 * m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const Complex d = spectrum.bins[bins[static_cast<std::size_t>(i)]] -
                          model(p, bins[static_cast<std::size_t>(i)]);
        r(2 * i) = d.real();
        r(2 * i + 1) = d.imag();
      }
      return r;
    };
    problem.valid = [](const Eigen::VectorXd& p) { return p(3) > 0.05 && p(3) < 20.0; };

    // For fixed (x0, w = 1) the model is linear in (a cos φ, a sin φ); scan
    // x0 on that profile to start the full fit inside the right basin.
    auto profile = [&](double x0, Complex* amplitude) {
      Eigen::MatrixXd basis(2 * m, 2);
      Eigen::VectorXd data(2 * m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const std::size_t k = bins[static_cast<std::size_t>(i)];
        const double kk = static_cast<double>(k);
        const Complex pos = scale * window_kernel(window, x0 - kk, n);
        const Complex neg = scale * window_kernel(window, -x0 - kk, n);
        const Complex re = pos + neg;               // ∂/∂(a cos φ)
        const Complex im = Complex(0, 1) * (pos - neg);  // ∂/∂(a sin φ)
        basis(2 * i, 0) = re.real();
        basis(2 * i + 1, 0) = re.imag();
        basis(2 * i, 1) = im.real();
        basis(2 * i + 1, 1) = im.imag();
        data(2 * i) = spectrum.bins[k].real();
        data(2 * i + 1) = spectrum.bins[k].imag();
      }
      const Eigen::Vector2d c = basis.colPivHouseholderQr().solve(data);
      if (amplitude) *amplitude = Complex(c(0), c(1));
      return -(data - basis * c).squaredNorm();
    };
    const double kc = static_cast<double>(k0);
    double best = x_start;
    double best_value = profile(best, nullptr);
    for (int i = 0; i <= 40; ++i) {
      const double x0 = kc - 1.0 + 0.05 * i;
      const double v = profile(x0, nullptr);
      if (v > best_value) {
        best_value = v;
        best = x0;
      }
    }
    best = numerics::golden_section_maximize([&](double x0) { return profile(x0, nullptr); },
                                             best - 0.05, best + 0.05, 1e-12);
    Complex c_start;
    profile(best, &c_start);
    Eigen::VectorXd p0(4);
    p0 << std::abs(c_start), std::arg(c_start), best, 1.0;
    problem.steps = Eigen::Vector4d(1e-6 * std::max(p0(0), 1e-300), 1e-6, 1e-6, 1e-6);
    problem.cost_floor = cost_floor;

    const LmResult lm = levenberg_marquardt(problem, p0, options.max_iterations);
    const double ideal = ideal_linewidth_bins(window, n);
    double a = lm.params(0), phi = lm.params(1);
    if (a < 0.0) {
      a = -a;
      phi += std::numbers::pi;
    }
    fit.amplitude = a;
    fit.phase = wrap_phase(phi);
    fit.center_frequency = lm.params(2) / t;
    fit.width_scale = lm.params(3);
    fit.linewidth = ideal * lm.params(3) / t;
    fit.sigma_amplitude = std::sqrt(std::max(lm.covariance(0, 0), 0.0));
    fit.sigma_frequency = std::sqrt(std::max(lm.covariance(2, 2), 0.0)) / t;
    fit.sigma_linewidth = ideal * std::sqrt(std::max(lm.covariance(3, 3), 0.0)) / t;
    fit.residual_norm = std::sqrt(lm.cost);
    fit.iterations = lm.iterations;
  } else {
    // Lorentzian in power, |X|² = P/(1 + ((k − x0)/hw)²); FWHM = 2·hw bins.
    double power_energy = 0.0;
    for (std::size_t k : bins) power_energy += std::pow(spectrum.magnitude[k], 4);
    LmProblem problem;
    problem.residual = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const std::size_t k = bins[static_cast<std::size_t>(i)];
        const double u = (static_cast<double>(k) - p(1)) / p(2);
        r(i) = spectrum.magnitude[k] * spectrum.magnitude[k] - p(0) / (1.0 + u * u);
      }
      return r;
    };
    problem.valid = [](const Eigen::VectorXd& p) { return p(2) > 1e-3 && p(0) > 0.0; };
    Eigen::VectorXd p0(3);
    p0 << y0 * y0, x_start, 0.6;
    problem.steps = Eigen::Vector3d(1e-6 * std::max(y0 * y0, 1e-300), 1e-6, 1e-6);
    problem.cost_floor = 1e-26 * power_energy;
    const LmResult lm = levenberg_marquardt(problem, p0, options.max_iterations);
    fit.amplitude = std::sqrt(lm.params(0));
    fit.center_frequency = lm.params(1) / t;
    fit.width_scale = lm.params(2);
    fit.linewidth = 2.0 * lm.params(2) / t;
    fit.sigma_amplitude = std::sqrt(std::max(lm.covariance(0, 0), 0.0)) / (2.0 * fit.amplitude);
    fit.sigma_frequency = std::sqrt(std::max(lm.covariance(1, 1), 0.0)) / t;
    fit.sigma_linewidth = 2.0 * std::sqrt(std::max(lm.covariance(2, 2), 0.0)) / t;
    fit.residual_norm = std::sqrt(lm.cost);
    fit.iterations = lm.iterations;
  }

  // A noiseless fit can drive the residual to zero; σ_f stays positive at
  // the working-precision floor.
  const double floor = std::numeric_limits<double>::epsilon() * std::abs(fit.center_frequency);
  fit.sigma_frequency = std::max(fit.sigma_frequency, floor);
  if (!(fit.linewidth > 0.0)) throw FitError("fitted linewidth is not positive");
  if (fit.center_frequency < band.low || fit.center_frequency > band.high) {
    throw FitError("fitted centre frequency left the search band");
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Scaling studies

std::uint64_t scaling_seed(std::uint64_t base_seed, std::size_t t_index, std::size_t replicate) {
  return substream_seed(base_seed, (static_cast<std::uint64_t>(t_index) << 32) |
                                       static_cast<std::uint64_t>(replicate));
}

namespace {

std::vector<ScalingRow> run_rows(const TraceFactory& factory, const std::vector<double>& lengths,
                                 const ScalingOptions& options) {
  if (lengths.size() < 2) throw ParameterError("scaling study needs at least two record lengths");
  const std::size_t seeds = options.seeds;
  return numerics::parallel_map(lengths.size() * seeds, [&](std::size_t idx) {
    const std::size_t ti = idx / seeds;
    const std::size_t rep = idx % seeds;
    const std::uint64_t seed = scaling_seed(options.base_seed, ti, rep);
    const TimeTrace trace = factory(lengths[ti], seed);
    const Spectrum spectrum = power_spectrum(trace, options.window);
    return ScalingRow{lengths[ti], seed, fit_peak(spectrum, options.band, options.fit)};
  });
}

void fit_slope(ScalingStudy& study) {
  std::vector<double> x, y, w;
  bool weighted = true;
  for (const auto& p : study.points) {
    if (!(p.value > 0.0)) throw FitError("scaling value is not positive; cannot take logs");
    x.push_back(std::log(p.record_length));
    y.push_back(std::log(p.value));
    const double rel = p.sigma / p.value;
    if (!(rel > 0.0)) weighted = false;
    w.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
  }
  const auto line = numerics::fit_line(x, y, weighted ? std::span<const double>(w)
                                                      : std::span<const double>{});
  study.slope = line.slope;
  study.slope_sigma = line.slope_sigma;
  study.intercept = line.intercept;
}

}  // namespace

ScalingStudy resolution_vs_time(const TraceFactory& factory, const std::vector<double>& lengths,
                                const ScalingOptions& options) {
  const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
  if (lengths.empty() || std::log10(*hi / *lo) < 1.5 - 1e-9) {
    throw ParameterError("record lengths must span at least 1.5 decades");
  }
  if (options.seeds < 1) throw ParameterError("need at least one seed");
  ScalingStudy study;
  study.rows = run_rows(factory, lengths, options);
  for (std::size_t ti = 0; ti < lengths.size(); ++ti) {
    std::vector<double> widths, centers, sigmas;
    for (std::size_t r = 0; r < options.seeds; ++r) {
      const auto& row = study.rows[ti * options.seeds + r];
      widths.push_back(row.fit.linewidth);
      centers.push_back(row.fit.center_frequency);
      sigmas.push_back(row.fit.sigma_frequency);
    }
    ScalingPoint p;
    p.record_length = lengths[ti];
    p.value = numerics::mean(widths);
    p.sigma = numerics::stddev(widths) / std::sqrt(static_cast<double>(widths.size()));
    p.mean_center = numerics::mean(centers);
    p.mean_sigma_frequency = numerics::mean(sigmas);
    study.points.push_back(p);
  }
  fit_slope(study);
  return study;
}

ScalingStudy precision_vs_time(const TraceFactory& factory, const std::vector<double>& lengths,
                               const ScalingOptions& options) {
  if (options.seeds < 50) throw ParameterError("precision study needs at least 50 seeds per T");
  ScalingStudy study;
  study.rows = run_rows(factory, lengths, options);
  for (std::size_t ti = 0; ti < lengths.size(); ++ti) {
    std::vector<double> centers, sigmas;
    for (std::size_t r = 0; r < options.seeds; ++r) {
      const auto& row = study.rows[ti * options.seeds + r];
      centers.push_back(row.fit.center_frequency);
      sigmas.push_back(row.fit.sigma_frequency);
    }
    ScalingPoint p;
    p.record_length = lengths[ti];
    p.value = numerics::stddev(centers);
    p.sigma = p.value / std::sqrt(2.0 * static_cast<double>(centers.size() - 1));
    p.mean_center = numerics::mean(centers);
    p.mean_sigma_frequency = numerics::mean(sigmas);
    study.points.push_back(p);
  }
  fit_slope(study);
  return study;
}

TimeTrace sinusoid_trace(double frequency, double amplitude, double phase, double sample_rate,
                         double record_length, double noise_density, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(record_length * sample_rate));
  TimeTrace trace{sample_rate, 0.0, std::vector<double>(n), {}};
  const double sigma = NoiseModel::sample_sigma(noise_density, sample_rate);
  auto rng = make_rng(seed, 1);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < n; ++i) {
    trace.v1[i] = amplitude * std::cos(kTwoPi * frequency * trace.time(i) + phase);
    if (sigma > 0.0) trace.v1[i] += sigma * normal(rng);
  }
  return trace;
}

}  // namespace dqsim
