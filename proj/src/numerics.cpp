#include "dqsim/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dqsim/errors.hpp"

namespace dqsim::numerics {

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double relative_tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > relative_tolerance * (std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights, bool residual_scaled) {
  const std::size_t n = x.size();
  if (n != y.size() || (!weights.empty() && weights.size() != n)) {
    throw Error("fit_line: mismatched input lengths");
  }
  if (n < 2) throw FitError("fit_line: need at least two points");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw FitError("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = (sw * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  double chi2 = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    chi2 += w * r * r;
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / static_cast<double>(n));
  double scale = 1.0;
  if (residual_scaled || weights.empty()) {
    scale = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
  }
  fit.slope_sigma = std::sqrt(scale * sw / det);
  fit.intercept_sigma = std::sqrt(scale * sxx / det);
  return fit;
}

ProportionalFit fit_proportional(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw FitError("fit_proportional: need two or more paired points");
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  if (!(sxx > 0.0)) throw FitError("fit_proportional: all abscissae are zero");
  ProportionalFit fit;
  fit.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_sigma = std::sqrt(rss / static_cast<double>(n - 1) / sxx);
  fit.relative_residual = syy > 0.0 ? std::sqrt(rss / syy) : 0.0;
  return fit;
}

std::vector<std::size_t> local_maxima(std::span<const double> y, double min_prominence) {
  std::vector<std::size_t> peaks;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    // Skip over a flat top so it counts once.
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 >= n || !(y[j + 1] < y[i])) continue;
    double left_min = y[i];
    for (std::size_t k = i; k-- > 0;) {
      if (y[k] > y[i]) break;
      left_min = std::min(left_min, y[k]);
    }
    double right_min = y[i];
    for (std::size_t k = j + 1; k < n; ++k) {
      if (y[k] > y[i]) break;
      right_min = std::min(right_min, y[k]);
    }
    if (y[i] - std::max(left_min, right_min) >= min_prominence) peaks.push_back(i);
    i = j;
  }
  return peaks;
}

double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d1 = (y1 - y0) / (x1 - x0);
  const double d2 = (y2 - y1) / (x2 - x1);
  const double curvature = (d2 - d1) / (x2 - x0);
  if (curvature == 0.0) return x1;
  return 0.5 * (x0 + x1) - d1 / (2.0 * curvature);
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  std::vector<double> out = linspace(std::log(lo), std::log(hi), n);
  for (double& v : out) v = std::exp(v);
  return out;
}

}  // namespace dqsim::numerics
