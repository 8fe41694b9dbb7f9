#include "dqsim/photophysics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dqsim/errors.hpp"
#include "dqsim/io.hpp"
#include "dqsim/model.hpp"
#include "dqsim/rng.hpp"

namespace dqsim {

namespace {
enum NoiseStream : std::uint64_t { kFluorescenceNoise = 1, kReferenceNoise = 2, kDrift = 3 };
}

void TimeTrace::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw DataError("sample rate must be positive");
  }
  if (!v2.empty() && v2.size() != v1.size()) {
    throw DataError("v1 and v2 channels must have equal length");
  }
}

TimeTrace TimeTrace::from_timestamps(std::span<const double> times, std::vector<double> v1,
                                     std::vector<double> v2) {
  if (times.size() < 2) throw DataError("need at least two samples to infer a sample rate");
  if (times.size() != v1.size()) throw DataError("timestamp and sample counts differ");
  const double n = static_cast<double>(times.size() - 1);
  const double dt = (times.back() - times.front()) / n;
  if (!(dt > 0.0)) throw DataError("timestamps must increase");
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expected = times.front() + dt * static_cast<double>(i);
    if (std::abs(times[i] - expected) > 1e-9 * dt + 1e-12 * std::abs(expected)) {
      std::ostringstream msg;
      msg << "non-uniform sampling at index " << i << " (t = " << times[i] << " s)";
      throw DataError(msg.str());
    }
  }
  TimeTrace trace{1.0 / dt, times.front(), std::move(v1), std::move(v2)};
  trace.validate();
  return trace;
}

void VoltageModel::validate() const {
  if (!(contrast > 0.0 && contrast <= 1.0)) throw ParameterError("contrast c1 must be in (0, 1]");
  if (!(offset >= 0.0)) throw ParameterError("offset c0 must be non-negative");
  if (!(gain > 0.0)) throw ParameterError("gain must be positive");
  if (!(reference_level > 0.0)) throw ParameterError("reference level must be positive");
}

void NoiseModel::validate() const {
  if (!(white_noise_density >= 0.0) || !(reference_noise_density >= 0.0)) {
    throw ParameterError("noise densities must be non-negative");
  }
  if (!(drift_amplitude >= 0.0)) throw ParameterError("drift amplitude must be non-negative");
  if (!(drift_corner_frequency > 0.0)) {
    throw ParameterError("drift corner frequency must be positive");
  }
}

double NoiseModel::sample_sigma(double density, double sample_rate) {
  return density * std::sqrt(0.5 * sample_rate);
}

double gamma1_from_power(double laser_power, double kappa, double floor) {
  if (!(laser_power >= 0.0)) throw ParameterError("laser power must be non-negative");
  if (!(kappa > 0.0)) throw ParameterError("power-to-rate calibration kappa must be positive");
  const double rate = kappa * laser_power;
  if (rate < floor) {
    std::ostringstream msg;
    msg << "laser pumping rate " << rate << " 1/s is below the floor; using " << floor << " 1/s";
    warn(msg.str());
    return floor;
  }
  return rate;
}

TimeTrace synthesize_voltages(std::span<const double> p0, double sample_rate, double start_time,
                              const VoltageModel& model, const NoiseModel& noise) {
  model.validate();
  noise.validate();
  if (!(sample_rate > 0.0)) throw ParameterError("sample rate must be positive");
  const std::size_t n = p0.size();
  TimeTrace trace{sample_rate, start_time, std::vector<double>(n), std::vector<double>(n)};

  std::vector<double> drift(n, 1.0);
  if (noise.drift_amplitude > 0.0 && n > 0) {
    auto rng = make_rng(noise.rng_seed, kDrift);
    std::normal_distribution<double> normal;
    const double a = std::exp(-kTwoPi * noise.drift_corner_frequency / sample_rate);
    const double kick = std::sqrt(1.0 - a * a);
    double u = normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
      drift[i] = 1.0 + noise.drift_amplitude * u;
      u = a * u + kick * normal(rng);
    }
  }

  const double sigma1 = NoiseModel::sample_sigma(noise.white_noise_density, sample_rate);
  const double sigma2 = NoiseModel::sample_sigma(noise.reference_noise_density, sample_rate);
  auto rng1 = make_rng(noise.rng_seed, kFluorescenceNoise);
  auto rng2 = make_rng(noise.rng_seed, kReferenceNoise);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < n; ++i) {
    trace.v1[i] = model.fluorescence(p0[i]) * drift[i];
    trace.v2[i] = model.reference_level * drift[i];
    if (sigma1 > 0.0) trace.v1[i] += sigma1 * normal(rng1);
    if (sigma2 > 0.0) trace.v2[i] += sigma2 * normal(rng2);
  }
  return trace;
}

TimeTrace drift_correct(const TimeTrace& trace) {
  trace.validate();
  if (!trace.has_reference()) throw DataError("drift correction needs the reference channel v2");
  const auto [lo, hi] = std::minmax_element(trace.v2.begin(), trace.v2.end());
  for (std::size_t i = 0; i < trace.v2.size(); ++i) {
    if (!(trace.v2[i] > 0.0)) {
      throw DataError("non-positive reference sample at index " + std::to_string(i));
    }
  }
  TimeTrace out = trace;
  const double mean =
      *lo == *hi ? *lo
                 : std::accumulate(trace.v2.begin(), trace.v2.end(), 0.0) /
                       static_cast<double>(trace.v2.size());
  for (std::size_t i = 0; i < out.v1.size(); ++i) out.v1[i] = trace.v1[i] * (mean / trace.v2[i]);
  std::fill(out.v2.begin(), out.v2.end(), mean);
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const TimeTrace& trace) {
  trace.validate();
  std::string out = "time_s,v1_V,v2_V\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += io::format_double(trace.time(i));
    out += ',';
    out += io::format_double(trace.v1[i]);
    out += ',';
    if (trace.has_reference()) out += io::format_double(trace.v2[i]);
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

TimeTrace read_trace_csv(const std::filesystem::path& path) {
  const io::CsvTable table = io::parse_csv(io::read_file(path));
  if (table.header != std::vector<std::string>{"time_s", "v1_V", "v2_V"}) {
    throw DataError(path.string() + ": expected header time_s,v1_V,v2_V");
  }
  std::vector<double> t, v1, v2;
  bool reference = !table.rows.empty() && !std::isnan(table.rows.front()[2]);
  for (const auto& row : table.rows) {
    t.push_back(row[0]);
    v1.push_back(row[1]);
    if (reference) {
      if (std::isnan(row[2])) throw DataError(path.string() + ": v2 column partially empty");
      v2.push_back(row[2]);
    }
  }
  return TimeTrace::from_timestamps(t, std::move(v1), std::move(v2));
}

}  // namespace dqsim
