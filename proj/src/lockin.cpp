#include "dqsim/lockin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dqsim/errors.hpp"
#include "dqsim/io.hpp"
#include "dqsim/model.hpp"

namespace dqsim {

void LockinConfig::validate() const {
  if (!(time_constant >= 0.0)) throw ConfigError("lock-in time constant must be >= 0");
  if (filter_order < 1 || filter_order > 8) {
    throw ConfigError("lock-in filter order must be within [1, 8]");
  }
  if (!(reference_frequency >= 0.0)) throw ConfigError("reference frequency must be >= 0");
}

LowPassCascade::LowPassCascade(int order, double time_constant, double sample_rate)
    : alpha_(1.0 - std::exp(-1.0 / (time_constant * sample_rate))),
      state_(static_cast<std::size_t>(order), 0.0) {}

void LowPassCascade::reset(double value) { std::fill(state_.begin(), state_.end(), value); }

double LowPassCascade::step(double input) {
  double v = input;
  for (double& s : state_) {
    s += alpha_ * (v - s);
    v = s;
  }
  return v;
}

DemodOutput demodulate(const TimeTrace& trace, const LockinConfig& config) {
  config.validate();
  trace.validate();
  if (!(config.time_constant > 0.0)) {
    throw ConfigError("demodulation needs a positive time constant (0 is oscilloscope mode)");
  }
  if (!(config.reference_frequency < 0.5 * trace.sample_rate)) {
    std::ostringstream msg;
    msg << "reference frequency " << config.reference_frequency
        << " Hz violates Nyquist for sample rate " << trace.sample_rate << " Hz";
    throw ConfigError(msg.str());
  }
  const std::size_t n = trace.size();
  DemodOutput out{trace.sample_rate, trace.start_time, std::vector<double>(n),
                  std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  LowPassCascade fx(config.filter_order, config.time_constant, trace.sample_rate);
  LowPassCascade fy(config.filter_order, config.time_constant, trace.sample_rate);
  const double w = kTwoPi * config.reference_frequency;
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = w * trace.time(i) + config.reference_phase;
    const double v = trace.v1[i];
    out.x[i] = fx.step(2.0 * v * std::cos(phase));
    out.y[i] = fy.step(-2.0 * v * std::sin(phase));
    out.r[i] = std::hypot(out.x[i], out.y[i]);
    out.theta[i] = std::atan2(out.y[i], out.x[i]);
  }
  return out;
}

TimeTrace scope(const TimeTrace& trace, const LockinConfig& config) {
  if (config.time_constant != 0.0) {
    throw ConfigError("oscilloscope mode requires a zero time constant");
  }
  if (config.reference_frequency != 0.0) {
    throw ConfigError("oscilloscope mode requires a zero reference frequency");
  }
  trace.validate();
  return trace;
}

double filter_settling_time(int order, double time_constant) {
  // Step-response residual of `order` stages: e^{-x} Σ_{j<order} x^j / j!.
  auto residual = [order](double x) {
    double term = 1.0, sum = 0.0;
    for (int j = 0; j < order; ++j) {
      sum += term;
      term *= x / (j + 1);
    }
    return std::exp(-x) * sum;
  };
  double lo = 0.0, hi = 100.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > kFilterResidual ? lo : hi) = mid;
  }
  return hi * time_constant;
}

SettledAmplitude settled_amplitude(const TimeTrace& trace, const LockinConfig& config,
                                   double sensor_settling) {
  config.validate();
  const double settle = filter_settling_time(config.filter_order, config.time_constant) + sensor_settling;
  const double needed = settle + 2.0 * config.time_constant;
  if (trace.duration() < needed) {
    std::ostringstream msg;
    msg << "record of " << trace.duration() << " s is shorter than the " << needed
        << " s needed to settle the lock-in";
    throw InsufficientDataError(msg.str());
  }
  const DemodOutput demod = demodulate(trace, config);
  const std::size_t n = demod.size();
  const auto settled_index = static_cast<std::size_t>(std::ceil(settle * demod.sample_rate));
  std::size_t first = std::max(n - n / 3, settled_index);
  if (config.reference_frequency > 0.0) {
    // Whole reference periods only, so ripple at f_ref averages out.
    const double period = demod.sample_rate / config.reference_frequency;
    const double periods = std::floor(static_cast<double>(n - first) / period);
    if (periods >= 1.0) first = n - static_cast<std::size_t>(std::llround(periods * period));
  }
  constexpr std::size_t kBlocks = 8;
  if (n - first < kBlocks) throw InsufficientDataError("too few samples in the settled window");

  SettledAmplitude result;
  const std::size_t count = n - first;
  result.amplitude =
      std::accumulate(demod.r.begin() + static_cast<std::ptrdiff_t>(first), demod.r.end(), 0.0) /
      static_cast<double>(count);

  std::array<double, kBlocks> means{};
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const std::size_t lo = first + b * count / kBlocks;
    const std::size_t hi = first + (b + 1) * count / kBlocks;
    means[b] = std::accumulate(demod.r.begin() + static_cast<std::ptrdiff_t>(lo),
                               demod.r.begin() + static_cast<std::ptrdiff_t>(hi), 0.0) /
               static_cast<double>(hi - lo);
  }
  const double m = std::accumulate(means.begin(), means.end(), 0.0) / kBlocks;
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  result.standard_error = std::sqrt(var / (kBlocks - 1) / kBlocks);
  return result;
}

void write_demod_csv(const std::filesystem::path& path, const DemodOutput& out) {
  io::CsvTable table{{"time_s", "X_V", "Y_V", "R_V", "theta_rad"}, {}};
  table.rows.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    table.rows.push_back({out.time(i), out.x[i], out.y[i], out.r[i], out.theta[i]});
  }
  io::write_file_atomic(path, table.to_string());
}

}  // namespace dqsim
