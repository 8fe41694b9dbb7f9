#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace dqsim::numerics {

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double relative_tolerance = 1e-10);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_sigma = 0.0;
  double intercept_sigma = 0.0;
  double residual_rms = 0.0;
};

/// Weighted least squares y = intercept + slope·x. With `residual_scaled` the
/// covariance is scaled by the reduced χ²; otherwise the weights are taken as
/// 1/σ² of the observations.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {}, bool residual_scaled = true);

struct ProportionalFit {
  double slope = 0.0;
  double slope_sigma = 0.0;
  double relative_residual = 0.0;  ///< rms(residual)/rms(y)
};

/// Least squares y = k·x through the origin.
ProportionalFit fit_proportional(std::span<const double> x, std::span<const double> y);

/// Indices of strict local maxima whose prominence (height above the higher
/// of the two flanking minima) is at least `min_prominence`.
std::vector<std::size_t> local_maxima(std::span<const double> y, double min_prominence = 0.0);

/// Abscissa of the parabola through three neighbouring points.
double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2);

double mean(std::span<const double> v);
/// Sample standard deviation (n − 1).
double stddev(std::span<const double> v);

std::vector<double> linspace(double lo, double hi, std::size_t n);
std::vector<double> logspace(double lo, double hi, std::size_t n);

/// Evaluates fn(i) for i in [0, n) on a worker pool and returns the results
/// in index order, so the reduction is independent of scheduling.
template <class Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(n);
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace dqsim::numerics
