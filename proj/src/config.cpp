#include "dqsim/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dqsim/errors.hpp"
#include "dqsim/io.hpp"
#include "dqsim/numerics.hpp"

namespace dqsim {

namespace {

using Json = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Pulls typed values out of one JSON object and remembers which keys were
// used, so leftovers can be reported as unknown.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
  }

  void get(const char* key, double& out) { read(key, [&](const Json& v, const std::string& p) {
    if (!v.is_number()) throw ConfigError(p + ": expected a number");
    out = v.get<double>();
  }); }

  void get(const char* key, int& out) { read(key, [&](const Json& v, const std::string& p) {
    if (!v.is_number_integer()) throw ConfigError(p + ": expected an integer");
    out = v.get<int>();
  }); }

  void get(const char* key, std::uint64_t& out) { read(key, [&](const Json& v, const std::string& p) {
    if (!v.is_number_unsigned()) throw ConfigError(p + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }); }

  void get(const char* key, std::string& out) { read(key, [&](const Json& v, const std::string& p) {
    if (!v.is_string()) throw ConfigError(p + ": expected a string");
    out = v.get<std::string>();
  }); }

  void get(const char* key, std::optional<double>& out) {
    read(key, [&](const Json& v, const std::string& p) {
      if (v.is_null()) {
        out.reset();
      } else if (v.is_number()) {
        out = v.get<double>();
      } else {
        throw ConfigError(p + ": expected a number or null");
      }
    });
  }

  void get(const char* key, std::vector<double>& out) {
    read(key, [&](const Json& v, const std::string& p) {
      if (!v.is_array()) throw ConfigError(p + ": expected an array of numbers");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(p + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
    });
  }

  void get(const char* key, std::array<double, 3>& out) {
    read(key, [&](const Json& v, const std::string& p) {
      if (!v.is_array() || v.size() != 3) throw ConfigError(p + ": expected three numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!v[i].is_number()) throw ConfigError(p + ": expected three numbers");
        out[i] = v[i].get<double>();
      }
    });
  }

  template <class Fn>
  void section(const char* key, Fn fn) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Section child(j_.at(key), join(path_, key));
    fn(child);
    child.finish();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(join(path_, item.key()) + ": unknown key");
      }
    }
  }

 private:
  template <class Fn>
  void read(const char* key, Fn fn) {
    seen_.insert(key);
    if (j_.contains(key)) fn(j_.at(key), join(path_, key));
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["constants"] = {
      {"zero_field_splitting_hz", c.constants.zero_field_splitting_hz},
      {"gyromagnetic_ratio_hz_per_t", c.constants.gyromagnetic_ratio_hz_per_t},
      {"hyperfine_coupling_hz", c.constants.hyperfine_coupling_hz},
  };
  const auto& s = c.sensor;
  j["sensor"] = {
      {"static_field_t", s.static_field_t},
      {"drive_amplitude_t", s.drive_amplitude_t},
      {"saturation", optional_json(s.saturation)},
      {"amplitude_damping_rate", s.amplitude_damping_rate},
      {"dephasing_rate", s.dephasing_rate},
      {"t2_target_s", optional_json(s.t2_target_s)},
      {"nuclear_projection", s.nuclear_projection},
      {"reference_line", s.reference_line},
      {"detuning_hz", optional_json(s.detuning_hz)},
      {"intrinsic_relaxation_rate", s.intrinsic_relaxation_rate},
      {"hyperfine_weights", s.hyperfine_weights},
  };
  j["drive"] = {{"amplitude_t", c.drive.amplitude_t},
                {"frequency_hz", c.drive.frequency_hz},
                {"phase_rad", c.drive.phase_rad}};
  j["voltage"] = {{"gain", c.voltage.gain},
                  {"offset", c.voltage.offset},
                  {"contrast", c.voltage.contrast},
                  {"reference_level", c.voltage.reference_level}};
  j["noise"] = {{"white_noise_density", c.noise.white_noise_density},
                {"reference_noise_density", c.noise.reference_noise_density},
                {"drift_amplitude", c.noise.drift_amplitude},
                {"drift_corner_frequency_hz", c.noise.drift_corner_frequency_hz}};
  j["lockin"] = {{"time_constant_periods", c.lockin.time_constant_periods},
                 {"filter_order", c.lockin.filter_order},
                 {"record_time_constants", c.lockin.record_time_constants},
                 {"samples_per_period", c.lockin.samples_per_period}};
  Json e;
  e["trace"] = {{"sample_rate_hz", c.trace.sample_rate_hz},
                {"duration_s", c.trace.duration_s},
                {"propagation", c.trace.propagation}};
  e["spectrum"] = {{"window", c.spectrum.window},
                   {"line_shape", c.spectrum.line_shape},
                   {"band_low_hz", c.spectrum.band_low_hz},
                   {"band_high_hz", c.spectrum.band_high_hz},
                   {"half_width_bins", c.spectrum.half_width_bins}};
  e["scaling"] = {{"resolution_lengths_s", c.scaling.resolution_lengths_s},
                  {"resolution_seeds", c.scaling.resolution_seeds},
                  {"precision_lengths_s", c.scaling.precision_lengths_s},
                  {"precision_seeds", c.scaling.precision_seeds},
                  {"snr", optional_json(c.scaling.snr)}};
  const auto& b = c.bandwidth;
  e["bandwidth"] = {{"saturation", b.saturation},
                    {"t2_target_s", b.t2_target_s},
                    {"amplitude_t", b.amplitude_t},
                    {"frequency_min_hz", b.frequency_min_hz},
                    {"frequency_max_hz", b.frequency_max_hz},
                    {"points", b.points},
                    {"gamma1", b.gamma1},
                    {"powers_w", b.powers_w},
                    {"kappa", optional_json(b.kappa)},
                    {"anchor_power_w", b.anchor_power_w},
                    {"anchor_bandwidth_hz", b.anchor_bandwidth_hz},
                    {"monotone_tolerance", b.monotone_tolerance}};
  const auto& r = c.response;
  e["response"] = {{"frequency_hz", r.frequency_hz},
                   {"saturation", r.saturation},
                   {"reference_line", r.reference_line},
                   {"max_field_t", r.max_field_t},
                   {"points", r.points},
                   {"min_prominence", r.min_prominence},
                   {"fit_max_t", r.fit_max_t},
                   {"fit_points", r.fit_points},
                   {"max_relative_residual", r.max_relative_residual},
                   {"noise_record_s", r.noise_record_s},
                   {"noise_sample_rate_hz", r.noise_sample_rate_hz},
                   {"band_fraction", r.band_fraction},
                   {"equivalent_sensitivity", optional_json(r.equivalent_sensitivity)},
                   {"propagation", r.propagation}};
  j["experiment"] = e;
  return j;
}

RunConfig from_json(const Json& j) {
  RunConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  root.section("constants", [&](Section& s) {
    s.get("zero_field_splitting_hz", c.constants.zero_field_splitting_hz);
    s.get("gyromagnetic_ratio_hz_per_t", c.constants.gyromagnetic_ratio_hz_per_t);
    s.get("hyperfine_coupling_hz", c.constants.hyperfine_coupling_hz);
  });
  root.section("sensor", [&](Section& s) {
    auto& v = c.sensor;
    s.get("static_field_t", v.static_field_t);
    s.get("drive_amplitude_t", v.drive_amplitude_t);
    s.get("saturation", v.saturation);
    s.get("amplitude_damping_rate", v.amplitude_damping_rate);
    s.get("dephasing_rate", v.dephasing_rate);
    s.get("t2_target_s", v.t2_target_s);
    s.get("nuclear_projection", v.nuclear_projection);
    s.get("reference_line", v.reference_line);
    s.get("detuning_hz", v.detuning_hz);
    s.get("intrinsic_relaxation_rate", v.intrinsic_relaxation_rate);
    s.get("hyperfine_weights", v.hyperfine_weights);
  });
  root.section("drive", [&](Section& s) {
    s.get("amplitude_t", c.drive.amplitude_t);
    s.get("frequency_hz", c.drive.frequency_hz);
    s.get("phase_rad", c.drive.phase_rad);
  });
  root.section("voltage", [&](Section& s) {
    s.get("gain", c.voltage.gain);
    s.get("offset", c.voltage.offset);
    s.get("contrast", c.voltage.contrast);
    s.get("reference_level", c.voltage.reference_level);
  });
  root.section("noise", [&](Section& s) {
    s.get("white_noise_density", c.noise.white_noise_density);
    s.get("reference_noise_density", c.noise.reference_noise_density);
    s.get("drift_amplitude", c.noise.drift_amplitude);
    s.get("drift_corner_frequency_hz", c.noise.drift_corner_frequency_hz);
  });
  root.section("lockin", [&](Section& s) {
    s.get("time_constant_periods", c.lockin.time_constant_periods);
    s.get("filter_order", c.lockin.filter_order);
    s.get("record_time_constants", c.lockin.record_time_constants);
    s.get("samples_per_period", c.lockin.samples_per_period);
  });
  root.section("experiment", [&](Section& e) {
    e.section("trace", [&](Section& s) {
      s.get("sample_rate_hz", c.trace.sample_rate_hz);
      s.get("duration_s", c.trace.duration_s);
      s.get("propagation", c.trace.propagation);
    });
    e.section("spectrum", [&](Section& s) {
      s.get("window", c.spectrum.window);
      s.get("line_shape", c.spectrum.line_shape);
      s.get("band_low_hz", c.spectrum.band_low_hz);
      s.get("band_high_hz", c.spectrum.band_high_hz);
      s.get("half_width_bins", c.spectrum.half_width_bins);
    });
    e.section("scaling", [&](Section& s) {
      s.get("resolution_lengths_s", c.scaling.resolution_lengths_s);
      s.get("resolution_seeds", c.scaling.resolution_seeds);
      s.get("precision_lengths_s", c.scaling.precision_lengths_s);
      s.get("precision_seeds", c.scaling.precision_seeds);
      s.get("snr", c.scaling.snr);
    });
    e.section("bandwidth", [&](Section& s) {
      auto& b = c.bandwidth;
      s.get("saturation", b.saturation);
      s.get("t2_target_s", b.t2_target_s);
      s.get("amplitude_t", b.amplitude_t);
      s.get("frequency_min_hz", b.frequency_min_hz);
      s.get("frequency_max_hz", b.frequency_max_hz);
      s.get("points", b.points);
      s.get("gamma1", b.gamma1);
      s.get("powers_w", b.powers_w);
      s.get("kappa", b.kappa);
      s.get("anchor_power_w", b.anchor_power_w);
      s.get("anchor_bandwidth_hz", b.anchor_bandwidth_hz);
      s.get("monotone_tolerance", b.monotone_tolerance);
    });
    e.section("response", [&](Section& s) {
      auto& r = c.response;
      s.get("frequency_hz", r.frequency_hz);
      s.get("saturation", r.saturation);
      s.get("reference_line", r.reference_line);
      s.get("max_field_t", r.max_field_t);
      s.get("points", r.points);
      s.get("min_prominence", r.min_prominence);
      s.get("fit_max_t", r.fit_max_t);
      s.get("fit_points", r.fit_points);
      s.get("max_relative_residual", r.max_relative_residual);
      s.get("noise_record_s", r.noise_record_s);
      s.get("noise_sample_rate_hz", r.noise_sample_rate_hz);
      s.get("band_fraction", r.band_fraction);
      s.get("equivalent_sensitivity", r.equivalent_sensitivity);
      s.get("propagation", r.propagation);
    });
  });
  root.finish();
  c.validate();
  return c;
}

// Field-level range checks.
class Checker {
 public:
  void require(bool ok, const char* field, const std::string& rule) {
    if (!ok) problems_ << "\n  " << field << ": " << rule;
  }
  void finite(double v, const char* field) { require(std::isfinite(v), field, "must be finite"); }
  void positive(double v, const char* field) { require(std::isfinite(v) && v > 0.0, field, "must be > 0"); }
  void non_negative(double v, const char* field) {
    require(std::isfinite(v) && v >= 0.0, field, "must be >= 0");
  }
  void line(int m, const char* field) { require(m >= -1 && m <= 1, field, "must be -1, 0 or +1"); }
  void throw_if_any() const {
    const std::string text = problems_.str();
    if (!text.empty()) throw ConfigError("invalid configuration:" + text);
  }

 private:
  std::ostringstream problems_;
};

template <class Fn>
bool parses(Fn fn) {
  try {
    fn();
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

void RunConfig::validate() const {
  Checker k;
  k.positive(constants.zero_field_splitting_hz, "constants.zero_field_splitting_hz");
  k.require(std::isfinite(constants.gyromagnetic_ratio_hz_per_t) &&
                constants.gyromagnetic_ratio_hz_per_t != 0.0,
            "constants.gyromagnetic_ratio_hz_per_t", "must be finite and nonzero");
  k.finite(constants.hyperfine_coupling_hz, "constants.hyperfine_coupling_hz");

  k.finite(sensor.static_field_t, "sensor.static_field_t");
  k.non_negative(sensor.drive_amplitude_t, "sensor.drive_amplitude_t");
  if (sensor.saturation) k.non_negative(*sensor.saturation, "sensor.saturation");
  k.positive(sensor.amplitude_damping_rate, "sensor.amplitude_damping_rate");
  k.non_negative(sensor.dephasing_rate, "sensor.dephasing_rate");
  if (sensor.t2_target_s) k.positive(*sensor.t2_target_s, "sensor.t2_target_s");
  k.line(sensor.nuclear_projection, "sensor.nuclear_projection");
  k.line(sensor.reference_line, "sensor.reference_line");
  if (sensor.detuning_hz) k.finite(*sensor.detuning_hz, "sensor.detuning_hz");
  k.non_negative(sensor.intrinsic_relaxation_rate, "sensor.intrinsic_relaxation_rate");
  double total = 0.0;
  bool weights_ok = true;
  for (double w : sensor.hyperfine_weights) {
    weights_ok = weights_ok && std::isfinite(w) && w >= 0.0;
    total += w;
  }
  k.require(weights_ok && std::abs(total - 1.0) < 1e-9, "sensor.hyperfine_weights",
            "must be non-negative and sum to 1");

  k.non_negative(drive.amplitude_t, "drive.amplitude_t");
  k.positive(drive.frequency_hz, "drive.frequency_hz");
  k.finite(drive.phase_rad, "drive.phase_rad");

  k.positive(voltage.gain, "voltage.gain");
  k.non_negative(voltage.offset, "voltage.offset");
  k.require(voltage.contrast > 0.0 && voltage.contrast <= 1.0, "voltage.contrast", "must be in (0, 1]");
  k.positive(voltage.reference_level, "voltage.reference_level");

  k.non_negative(noise.white_noise_density, "noise.white_noise_density");
  k.non_negative(noise.reference_noise_density, "noise.reference_noise_density");
  k.non_negative(noise.drift_amplitude, "noise.drift_amplitude");
  k.positive(noise.drift_corner_frequency_hz, "noise.drift_corner_frequency_hz");

  k.positive(lockin.time_constant_periods, "lockin.time_constant_periods");
  k.require(lockin.filter_order >= 1 && lockin.filter_order <= 8, "lockin.filter_order",
            "must be in [1, 8]");
  if (lockin.filter_order >= 1 && lockin.filter_order <= 8) {
    const double minimum = filter_settling_time(lockin.filter_order, 1.0) + 2.0;
    k.require(lockin.record_time_constants >= minimum, "lockin.record_time_constants",
              "must be >= " + io::format_double(std::ceil(minimum)) + " for this filter order");
  }
  k.require(lockin.samples_per_period >= 4, "lockin.samples_per_period", "must be >= 4");

  k.require(trace.sample_rate_hz > 2.0 * drive.frequency_hz, "experiment.trace.sample_rate_hz",
            "must exceed twice drive.frequency_hz");
  k.positive(trace.duration_s, "experiment.trace.duration_s");
  k.require(parses([&] { parse_propagation(trace.propagation); }), "experiment.trace.propagation",
            "must be automatic, quasi_static or trajectory");

  k.require(parses([&] { parse_window(spectrum.window); }), "experiment.spectrum.window",
            "must be rectangular or hann");
  k.require(parses([&] { parse_line_shape(spectrum.line_shape); }),
            "experiment.spectrum.line_shape", "must be windowed_sinusoid or lorentzian");
  k.require(spectrum.band_low_hz >= 0.0 && spectrum.band_high_hz > spectrum.band_low_hz,
            "experiment.spectrum.band_high_hz", "must exceed band_low_hz >= 0");
  k.require(spectrum.half_width_bins >= 2, "experiment.spectrum.half_width_bins", "must be >= 2");

  const auto all_positive = [](const std::vector<double>& v) {
    for (double x : v)
      if (!(std::isfinite(x) && x > 0.0)) return false;
    return !v.empty();
  };
  k.require(all_positive(scaling.resolution_lengths_s), "experiment.scaling.resolution_lengths_s",
            "must be a non-empty list of positive lengths");
  k.require(scaling.resolution_seeds >= 1, "experiment.scaling.resolution_seeds", "must be >= 1");
  k.require(all_positive(scaling.precision_lengths_s), "experiment.scaling.precision_lengths_s",
            "must be a non-empty list of positive lengths");
  k.require(scaling.precision_seeds >= 50, "experiment.scaling.precision_seeds", "must be >= 50");
  if (scaling.snr) k.positive(*scaling.snr, "experiment.scaling.snr");

  k.non_negative(bandwidth.saturation, "experiment.bandwidth.saturation");
  k.positive(bandwidth.t2_target_s, "experiment.bandwidth.t2_target_s");
  k.positive(bandwidth.amplitude_t, "experiment.bandwidth.amplitude_t");
  k.positive(bandwidth.frequency_min_hz, "experiment.bandwidth.frequency_min_hz");
  k.require(bandwidth.frequency_max_hz > bandwidth.frequency_min_hz,
            "experiment.bandwidth.frequency_max_hz", "must exceed frequency_min_hz");
  k.require(bandwidth.points >= 2, "experiment.bandwidth.points", "must be >= 2");
  k.require(bandwidth.gamma1.empty() || all_positive(bandwidth.gamma1), "experiment.bandwidth.gamma1",
            "must hold positive rates");
  bool powers_ok = true;
  for (double p : bandwidth.powers_w) powers_ok = powers_ok && std::isfinite(p) && p >= 0.0;
  k.require(powers_ok, "experiment.bandwidth.powers_w", "must hold non-negative powers");
  k.require(!bandwidth.gamma1.empty() || !bandwidth.powers_w.empty(), "experiment.bandwidth.gamma1",
            "gamma1 or powers_w must be non-empty");
  if (bandwidth.kappa) k.positive(*bandwidth.kappa, "experiment.bandwidth.kappa");
  k.positive(bandwidth.anchor_power_w, "experiment.bandwidth.anchor_power_w");
  k.positive(bandwidth.anchor_bandwidth_hz, "experiment.bandwidth.anchor_bandwidth_hz");
  k.non_negative(bandwidth.monotone_tolerance, "experiment.bandwidth.monotone_tolerance");

  k.positive(response.frequency_hz, "experiment.response.frequency_hz");
  k.non_negative(response.saturation, "experiment.response.saturation");
  k.line(response.reference_line, "experiment.response.reference_line");
  k.positive(response.max_field_t, "experiment.response.max_field_t");
  k.require(response.points >= 3, "experiment.response.points", "must be >= 3");
  k.non_negative(response.min_prominence, "experiment.response.min_prominence");
  k.positive(response.fit_max_t, "experiment.response.fit_max_t");
  k.require(response.fit_points >= 3, "experiment.response.fit_points", "must be >= 3");
  k.positive(response.max_relative_residual, "experiment.response.max_relative_residual");
  k.positive(response.noise_record_s, "experiment.response.noise_record_s");
  k.require(response.band_fraction > 0.0 && response.band_fraction < 1.0,
            "experiment.response.band_fraction", "must be in (0, 1)");
  k.require(response.noise_sample_rate_hz >
                2.0 * response.frequency_hz * (1.0 + response.band_fraction),
            "experiment.response.noise_sample_rate_hz",
            "must exceed 2 * frequency_hz * (1 + band_fraction)");
  if (response.equivalent_sensitivity) {
    k.non_negative(*response.equivalent_sensitivity, "experiment.response.equivalent_sensitivity");
  }
  k.require(parses([&] { parse_propagation(response.propagation); }),
            "experiment.response.propagation", "must be automatic, quasi_static or trajectory");
  k.throw_if_any();
}

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return parse_config(text);
}

RunConfig apply_overrides(const RunConfig& config, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return config;
  Json j = to_json(config);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + item + "' is not of the form section.key=value");
    }
    const std::string path = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    Json parsed;
    try {
      parsed = Json::parse(value);
    } catch (const Json::parse_error&) {
      parsed = value;
    }
    Json* node = &j;
    std::stringstream parts(path);
    std::string part, walked;
    std::vector<std::string> keys;
    while (std::getline(parts, part, '.')) keys.push_back(part);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      walked = join(walked, keys[i]);
      if (!node->is_object() || !node->contains(keys[i])) {
        throw ConfigError(walked + ": unknown key");
      }
      node = &(*node)[keys[i]];
    }
    if (node->is_object()) throw ConfigError(path + ": is a section, not a value");
    *node = parsed;
  }
  return from_json(j);
}

std::string config_echo(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
  return io::hex64(io::fnv1a64(config_echo(config)));
}

PhysicalConstants make_constants(const RunConfig& c) {
  return {angular(c.constants.zero_field_splitting_hz),
          angular(c.constants.gyromagnetic_ratio_hz_per_t),
          angular(c.constants.hyperfine_coupling_hz)};
}

SensorParams make_sensor_params(const RunConfig& c) {
  SensorParams p;
  p.static_field = c.sensor.static_field_t;
  p.drive_amplitude = c.sensor.drive_amplitude_t;
  p.amplitude_damping_rate = c.sensor.amplitude_damping_rate;
  p.dephasing_rate = c.sensor.t2_target_s
                         ? dephasing_for_t2(*c.sensor.t2_target_s, c.sensor.amplitude_damping_rate)
                         : c.sensor.dephasing_rate;
  p.nuclear_projection = c.sensor.nuclear_projection;
  p.intrinsic_relaxation_rate = c.sensor.intrinsic_relaxation_rate;
  OperatingPoint op;
  op.saturation = c.sensor.saturation;
  op.reference_line = c.sensor.reference_line;
  if (c.sensor.detuning_hz) op.detuning = angular(*c.sensor.detuning_hz);
  return apply_operating_point(p, make_constants(c), op);
}

HyperfineEnsemble make_ensemble(const RunConfig& c) {
  HyperfineEnsemble e;
  e.weights = c.sensor.hyperfine_weights;
  e.base = make_sensor_params(c);
  e.constants = make_constants(c);
  e.validate();
  return e;
}

HyperfineEnsemble make_response_ensemble(const RunConfig& c) {
  RunConfig r = c;
  r.sensor.saturation = c.response.saturation;
  r.sensor.reference_line = c.response.reference_line;
  return make_ensemble(r);
}

DriveField make_drive(const RunConfig& c) {
  return {c.drive.amplitude_t, angular(c.drive.frequency_hz), c.drive.phase_rad};
}

VoltageModel make_voltage(const RunConfig& c) {
  return {c.voltage.gain, c.voltage.offset, c.voltage.contrast, c.voltage.reference_level};
}

NoiseModel make_noise(const RunConfig& c) {
  return {c.noise.white_noise_density, c.noise.reference_noise_density, c.noise.drift_amplitude,
          c.noise.drift_corner_frequency_hz, c.seed};
}

LockinSettings make_lockin(const RunConfig& c) {
  return {c.lockin.time_constant_periods, c.lockin.filter_order, c.lockin.record_time_constants,
          c.lockin.samples_per_period};
}

Propagation parse_propagation(const std::string& name) {
  if (name == "automatic") return Propagation::automatic;
  if (name == "quasi_static") return Propagation::quasi_static;
  if (name == "trajectory") return Propagation::trajectory;
  throw ConfigError("unknown propagation '" + name + "'");
}

Window parse_window(const std::string& name) {
  if (name == "rectangular") return Window::rectangular;
  if (name == "hann") return Window::hann;
  throw ConfigError("unknown window '" + name + "'");
}

LineShape parse_line_shape(const std::string& name) {
  if (name == "windowed_sinusoid") return LineShape::windowed_sinusoid;
  if (name == "lorentzian") return LineShape::lorentzian;
  throw ConfigError("unknown line shape '" + name + "'");
}

FitOptions make_fit_options(const RunConfig& c) {
  FitOptions f;
  f.line_shape = parse_line_shape(c.spectrum.line_shape);
  f.half_width_bins = c.spectrum.half_width_bins;
  return f;
}

BandwidthSetup make_bandwidth_setup(const RunConfig& c) {
  BandwidthSetup s;
  s.base = make_sensor_params(c);
  s.constants = make_constants(c);
  s.saturation = c.bandwidth.saturation;
  s.t2_target = c.bandwidth.t2_target_s;
  if (c.sensor.detuning_hz) s.detuning = angular(*c.sensor.detuning_hz);
  s.field_amplitude = c.bandwidth.amplitude_t;
  s.frequencies = numerics::logspace(c.bandwidth.frequency_min_hz, c.bandwidth.frequency_max_hz,
                                     static_cast<std::size_t>(c.bandwidth.points));
  s.voltage = make_voltage(c);
  s.lockin = make_lockin(c);
  s.monotone_tolerance = c.bandwidth.monotone_tolerance;
  return s;
}

ScalingCampaignSetup make_scaling_setup(const RunConfig& c) {
  ScalingCampaignSetup s;
  s.sensor = make_ensemble(c);
  s.drive = make_drive(c);
  s.voltage = make_voltage(c);
  s.noise = make_noise(c);
  if (c.scaling.snr) {
    const EnsembleSensor sensor(s.sensor);
    const double amplitude = predicted_response_slope(sensor, s.voltage) * s.drive.amplitude;
    s.noise.white_noise_density = amplitude / *c.scaling.snr;
  }
  s.sample_rate = c.trace.sample_rate_hz;
  s.window = parse_window(c.spectrum.window);
  s.band = {c.spectrum.band_low_hz, c.spectrum.band_high_hz};
  s.fit = make_fit_options(c);
  s.propagation = parse_propagation(c.trace.propagation);
  return s;
}

ScalingCampaignOptions make_scaling_options(const RunConfig& c) {
  ScalingCampaignOptions o;
  o.resolution_lengths = c.scaling.resolution_lengths_s;
  o.resolution_seeds = static_cast<std::size_t>(c.scaling.resolution_seeds);
  o.precision_lengths = c.scaling.precision_lengths_s;
  o.precision_seeds = static_cast<std::size_t>(c.scaling.precision_seeds);
  o.base_seed = c.seed;
  return o;
}

SensitivityOptions make_sensitivity_options(const RunConfig& c) {
  SensitivityOptions o;
  o.frequency = c.response.frequency_hz;
  o.fit_grid = numerics::linspace(c.response.fit_max_t / c.response.fit_points,
                                  c.response.fit_max_t,
                                  static_cast<std::size_t>(c.response.fit_points));
  o.max_relative_residual = c.response.max_relative_residual;
  o.noise_record_length = c.response.noise_record_s;
  o.noise_sample_rate = c.response.noise_sample_rate_hz;
  o.band_fraction = c.response.band_fraction;
  o.lockin = make_lockin(c);
  o.propagation = parse_propagation(c.response.propagation);
  return o;
}

}  // namespace dqsim
