#include "oracles.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Unknowns x = (pe, pg, u, v). Rows: normalization, dpe, du, dv.
Eigen::Matrix4d system(const TwoLevel& q, double delta) {
  const double w = q.rabi, r = 1.0 / q.t2;
  Eigen::Matrix4d m;
  m << 1.0, 1.0, 0.0, 0.0,   //
      -q.gamma1, 0.0, 0.0, -w,  //
      0.0, 0.0, -r, delta,   //
      w / 2.0, -w / 2.0, -delta, -r;
  return m;
}

// ∂(system)/∂δ
Eigen::Matrix4d system_d_delta() {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(2, 3) = 1.0;
  m(3, 2) = -1.0;
  return m;
}

Eigen::Vector4d solve(const TwoLevel& q, double b) {
  const Eigen::Vector4d rhs(1.0, 0.0, 0.0, 0.0);
  return system(q, q.detuning + q.gyro * b).fullPivLu().solve(rhs);
}

}  // namespace

TwoLevel TwoLevel::from_saturation(double s, double dt2, double gamma1, double t2) {
  TwoLevel q;
  q.gamma1 = gamma1;
  q.t2 = t2;
  q.rabi = std::sqrt(s * gamma1 / t2);
  q.detuning = dt2 / t2;
  return q;
}

State steady_state(const TwoLevel& q, double b) {
  const Eigen::Vector4d x = solve(q, b);
  return {x(0), x(1), {x(2), x(3)}};
}

double p0(const TwoLevel& q, double b) { return solve(q, b)(1); }

double p0_slope(const TwoLevel& q, double b) {
  const Eigen::Vector4d x = solve(q, b);
  const Eigen::Matrix4d m = system(q, q.detuning + q.gyro * b);
  const Eigen::Vector4d dx = m.fullPivLu().solve(-(system_d_delta() * x));
  return dx(1) * q.gyro;
}

std::complex<double> transfer(const TwoLevel& q, double omega) {
  // Reduced state y = (pe, u, v), pg = 1 − pe.
  const Eigen::Vector4d x = solve(q, 0.0);
  const double w = q.rabi, r = 1.0 / q.t2, d = q.detuning;
  Eigen::Matrix3cd a;
  a << -q.gamma1, 0.0, -w,  //
      0.0, -r, d,           //
      w, -d, -r;
  // ∂f/∂b through δ.
  Eigen::Vector3cd g(0.0, q.gyro * x(3), -q.gyro * x(2));
  Eigen::Matrix3cd lhs = std::complex<double>(0.0, omega) * Eigen::Matrix3cd::Identity() - a;
  const Eigen::Vector3cd y = lhs.fullPivLu().solve(g);
  return -y(0);
}

double small_signal_bandwidth(const TwoLevel& q) {
  const double dc = std::abs(transfer(q, 0.0));
  auto below = [&](double f) { return std::abs(transfer(q, 2.0 * kPi * f)) < dc / std::sqrt(2.0); };
  double lo = 1.0, hi = 1e9;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    (below(mid) ? hi : lo) = mid;
  }
  return std::sqrt(lo * hi);
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * (std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double first_harmonic(const std::function<double(double)>& f, double amplitude, int samples) {
  // (1/π)∫₀^{2π} f(a cos θ) cos θ dθ; the trapezoid rule is spectrally
  // accurate for periodic integrands.
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double th = 2.0 * kPi * i / samples;
    sum += f(amplitude * std::cos(th)) * std::cos(th);
  }
  return std::abs(2.0 * sum / samples);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
