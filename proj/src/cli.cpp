#include "dqsim/cli.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dqsim/config.hpp"
#include "dqsim/errors.hpp"
#include "dqsim/io.hpp"
#include "dqsim/numerics.hpp"
#include "dqsim/selftest.hpp"

namespace dqsim {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kIncomplete = "INCOMPLETE";

struct Context {
  RunConfig config;
  fs::path out_dir;
  std::string input;  // spectrum: optional trace CSV
  std::ostream& out;
  Json summary;
  std::vector<std::string> files;
  int status = 0;  // nonzero when the command itself reports failure

  void write_csv(const std::string& name, const io::CsvTable& table) {
    io::write_file_atomic(out_dir / name, table.to_string());
    files.push_back(name);
  }
};

std::string fmt(double v) { return io::format_double(v); }

TimeTrace synthesize_configured_trace(const RunConfig& c) {
  const EnsembleSensor sensor(make_ensemble(c));
  const double fs = c.trace.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(c.trace.duration_s * fs));
  const TimeGrid grid{0.0, 1.0 / fs, n};
  const auto p0 = simulate_p0(sensor, make_drive(c), grid, parse_propagation(c.trace.propagation));
  return synthesize_voltages(p0, fs, 0.0, make_voltage(c), make_noise(c));
}

Json state_json(const SpinState& s) {
  const auto& m = s.matrix();
  const auto r = s.bloch();
  return {{"rho00", m(0, 0).real()},
          {"rho11", m(1, 1).real()},
          {"rho01_re", m(0, 1).real()},
          {"rho01_im", m(0, 1).imag()},
          {"bloch", {r.x(), r.y(), r.z()}},
          {"p0", p0_of_state(s)}};
}

void cmd_steady(Context& ctx) {
  const Sensor sensor(make_sensor_params(ctx.config), make_constants(ctx.config));
  const auto& rates = sensor.rates();
  io::CsvTable table{{"field_T", "p0_analytic", "p0_numeric", "max_abs_diff", "bloch_x", "bloch_y",
                      "bloch_z"},
                     {}};
  Json rows = Json::array();
  for (double b : {0.0, ctx.config.drive.amplitude_t}) {
    const SpinState numeric = steady_state_numeric(build_liouvillian(sensor, b));
    std::optional<SpinState> analytic;
    if (sensor.params().intrinsic_relaxation_rate == 0.0) analytic = steady_state_analytic(sensor, b);
    const double diff =
        analytic ? (analytic->matrix() - numeric.matrix()).cwiseAbs().maxCoeff() : std::nan("");
    const auto r = numeric.bloch();
    table.rows.push_back({b, analytic ? p0_of_state(*analytic) : std::nan(""), p0_of_state(numeric),
                          diff, r.x(), r.y(), r.z()});
    Json row{{"field_t", b}, {"numeric", state_json(numeric)}};
    row["analytic"] = analytic ? state_json(*analytic) : Json(nullptr);
    row["max_abs_diff"] = diff;
    rows.push_back(row);
    ctx.out << "b = " << fmt(b) << " T\n";
    if (analytic) ctx.out << "  P0 (analytic) = " << fmt(p0_of_state(*analytic)) << "\n";
    ctx.out << "  P0 (numeric)  = " << fmt(p0_of_state(numeric)) << "\n";
    if (analytic) ctx.out << "  max |analytic - numeric| = " << fmt(diff) << "\n";
  }
  ctx.write_csv("steady.csv", table);
  ctx.summary["rates"] = {{"t1_s", rates.t1},
                          {"t2_s", rates.t2},
                          {"saturation", rates.saturation},
                          {"detuning_hz", rates.detuning / kTwoPi},
                          {"optimal_detuning_hz", optimal_detuning(rates) / kTwoPi}};
  ctx.summary["states"] = rows;
  ctx.out << "T1 = " << fmt(rates.t1) << " s, T2 = " << fmt(rates.t2)
          << " s, s = " << fmt(rates.saturation) << "\n";
}

void cmd_trace(Context& ctx) {
  const TimeTrace trace = synthesize_configured_trace(ctx.config);
  write_trace_csv(ctx.out_dir / "trace.csv", trace);
  ctx.files.push_back("trace.csv");
  Json meta{{"sample_rate_hz", trace.sample_rate},
            {"start_time_s", trace.start_time},
            {"samples", trace.size()},
            {"seed", ctx.config.seed},
            {"config_hash", config_hash(ctx.config)}};
  io::write_file_atomic(ctx.out_dir / "trace_meta.json", meta.dump(2) + "\n");
  ctx.files.push_back("trace_meta.json");
  ctx.summary["samples"] = trace.size();
  ctx.summary["duration_s"] = trace.duration();
  ctx.out << "wrote " << trace.size() << " samples at " << fmt(trace.sample_rate) << " Hz\n";
}

void cmd_spectrum(Context& ctx) {
  const auto& c = ctx.config;
  TimeTrace trace = ctx.input.empty() ? synthesize_configured_trace(c) : read_trace_csv(ctx.input);
  if (trace.has_reference()) trace = drift_correct(trace);
  trace = scope(trace, LockinConfig{});
  const Spectrum spectrum = power_spectrum(trace, parse_window(c.spectrum.window));
  io::CsvTable table{{"frequency_Hz", "magnitude_V"}, {}};
  for (std::size_t k = 0; k < spectrum.frequency.size(); ++k) {
    table.rows.push_back({spectrum.frequency[k], spectrum.magnitude[k]});
  }
  ctx.write_csv("spectrum.csv", table);
  const PeakFit fit =
      fit_peak(spectrum, {c.spectrum.band_low_hz, c.spectrum.band_high_hz}, make_fit_options(c));
  ctx.summary["record_length_s"] = spectrum.record_length;
  ctx.summary["fit"] = {{"center_frequency_hz", fit.center_frequency},
                        {"sigma_frequency_hz", fit.sigma_frequency},
                        {"linewidth_hz", fit.linewidth},
                        {"sigma_linewidth_hz", fit.sigma_linewidth},
                        {"amplitude_v", fit.amplitude},
                        {"sigma_amplitude_v", fit.sigma_amplitude},
                        {"phase_rad", fit.phase},
                        {"width_scale", fit.width_scale},
                        {"residual_norm_v", fit.residual_norm},
                        {"iterations", fit.iterations}};
  ctx.out << "f = " << fmt(fit.center_frequency) << " +/- " << fmt(fit.sigma_frequency)
          << " Hz, FWHM = " << fmt(fit.linewidth) << " Hz, amplitude = " << fmt(fit.amplitude)
          << " V\n";
}

Json study_json(const ScalingStudy& s) {
  return {{"slope", s.slope}, {"slope_sigma", s.slope_sigma}, {"intercept", s.intercept}};
}

void cmd_scaling(Context& ctx) {
  const auto setup = make_scaling_setup(ctx.config);
  const auto report = scaling_campaign(setup, make_scaling_options(ctx.config));
  io::CsvTable rows{{"study", "record_length_s", "replicate", "center_Hz", "fwhm_Hz", "sigma_f_Hz",
                     "amplitude_V"},
                    {}};
  io::CsvTable points{{"study", "record_length_s", "value_Hz", "sigma_Hz", "mean_center_Hz",
                       "mean_sigma_f_Hz"},
                      {}};
  const std::vector<const ScalingStudy*> studies{&report.resolution_noiseless, &report.resolution,
                                                 &report.precision};
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const auto& st = *studies[i];
    const std::size_t seeds = st.rows.size() / st.points.size();
    for (std::size_t r = 0; r < st.rows.size(); ++r) {
      const auto& row = st.rows[r];
      rows.rows.push_back({static_cast<double>(i), row.record_length, static_cast<double>(r % seeds),
                           row.fit.center_frequency, row.fit.linewidth, row.fit.sigma_frequency,
                           row.fit.amplitude});
    }
    for (const auto& p : st.points) {
      points.rows.push_back({static_cast<double>(i), p.record_length, p.value, p.sigma,
                             p.mean_center, p.mean_sigma_frequency});
    }
  }
  ctx.write_csv("scaling_rows.csv", rows);
  ctx.write_csv("scaling_points.csv", points);
  double fwhm_t = 0.0;
  for (const auto& p : report.resolution_noiseless.points) fwhm_t += p.value * p.record_length;
  fwhm_t /= static_cast<double>(report.resolution_noiseless.points.size());
  ctx.summary["study_index"] = {{"0", "resolution_noiseless"}, {"1", "resolution"}, {"2", "precision"}};
  ctx.summary["resolution_noiseless"] = study_json(report.resolution_noiseless);
  ctx.summary["resolution_noiseless"]["mean_fwhm_times_t"] = fwhm_t;
  ctx.summary["resolution"] = study_json(report.resolution);
  ctx.summary["precision"] = study_json(report.precision);
  ctx.summary["noise_density_v_per_root_hz"] = setup.noise.white_noise_density;
  ctx.out << "resolution slope (noiseless) " << fmt(report.resolution_noiseless.slope)
          << ", FWHM*T " << fmt(fwhm_t) << "\n"
          << "resolution slope " << fmt(report.resolution.slope) << " +/- "
          << fmt(report.resolution.slope_sigma) << "\n"
          << "precision slope " << fmt(report.precision.slope) << " +/- "
          << fmt(report.precision.slope_sigma) << "\n";
}

void cmd_bandwidth(Context& ctx) {
  const auto& c = ctx.config.bandwidth;
  const BandwidthSetup setup = make_bandwidth_setup(ctx.config);
  const double calibrated = calibrate_kappa(setup, c.anchor_power_w, c.anchor_bandwidth_hz);
  const double kappa = c.kappa ? *c.kappa : calibrated;
  const auto results = c.powers_w.empty() ? bandwidth_vs_rate(setup, c.gamma1)
                                          : bandwidth_sweep(setup, c.powers_w, kappa);
  io::CsvTable table{{"gamma1_per_s", "power_W", "frequency_Hz", "amplitude_V", "normalized",
                      "quasi_static"},
                     {}};
  Json curves = Json::array();
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.frequency.size(); ++i) {
      table.rows.push_back({r.amplitude_damping_rate, r.laser_power, r.frequency[i], r.amplitude[i],
                            r.normalized[i], r.quasi_static[i] ? 1.0 : 0.0});
    }
    curves.push_back({{"gamma1_per_s", r.amplitude_damping_rate},
                      {"power_w", r.laser_power},
                      {"bandwidth_hz", r.bandwidth},
                      {"small_signal_bandwidth_hz", r.small_signal_bandwidth},
                      {"crossings", r.crossings},
                      {"monotone", r.monotone}});
    ctx.out << "Gamma1 = " << fmt(r.amplitude_damping_rate) << " 1/s: bandwidth "
            << fmt(r.bandwidth) << " Hz (small-signal " << fmt(r.small_signal_bandwidth) << " Hz)"
            << (r.monotone ? "" : ", not monotone") << "\n";
  }
  ctx.write_csv("bandwidth.csv", table);
  ctx.summary["kappa_per_s_w"] = kappa;
  ctx.summary["kappa_calibrated_per_s_w"] = calibrated;
  ctx.summary["curves"] = curves;
  if (results.size() > 1) {
    ctx.summary["growth"] = results.back().bandwidth / results.front().bandwidth;
  }
}

EnsembleSensor response_sensor(const RunConfig& c) { return EnsembleSensor(make_response_ensemble(c)); }

NoiseModel response_noise(const RunConfig& c, const EnsembleSensor& sensor) {
  NoiseModel noise = make_noise(c);
  if (c.response.equivalent_sensitivity) {
    noise.white_noise_density =
        noise_density_for_sensitivity(sensor, make_voltage(c), *c.response.equivalent_sensitivity);
  }
  return noise;
}

Json sensitivity_json(const SensitivityResult& r) {
  return {{"frequency_hz", r.frequency},
          {"slope_v_per_t", r.slope},
          {"slope_sigma_v_per_t", r.slope_sigma},
          {"relative_residual", r.relative_residual},
          {"noise_floor_v", r.noise_floor},
          {"noise_floor_sigma_v", r.noise_floor_sigma},
          {"noise_bins", r.noise_bins},
          {"minimum_field_t", r.minimum_field},
          {"minimum_field_sigma_t", r.minimum_field_sigma},
          {"sensitivity_t_per_root_hz", r.sensitivity},
          {"below_numerical_floor", r.below_numerical_floor}};
}

SensitivityResult run_sensitivity(Context& ctx, const EnsembleSensor& sensor) {
  const auto& c = ctx.config;
  const NoiseModel noise = response_noise(c, sensor);
  const auto result = estimate_sensitivity(sensor, make_voltage(c), noise, make_sensitivity_options(c));
  io::CsvTable table{{"field_T", "amplitude_V", "standard_error_V"}, {}};
  for (const auto& p : result.fit_points) {
    table.rows.push_back({p.field_amplitude, p.amplitude, p.standard_error});
  }
  ctx.write_csv("sensitivity_fit.csv", table);
  ctx.summary["noise_density_v_per_root_hz"] = noise.white_noise_density;
  ctx.summary["predicted_slope_v_per_t"] = predicted_response_slope(sensor, make_voltage(c));
  ctx.summary["sensitivity"] = sensitivity_json(result);
  return result;
}

void cmd_sensitivity(Context& ctx) {
  const EnsembleSensor sensor = response_sensor(ctx.config);
  const auto r = run_sensitivity(ctx, sensor);
  ctx.out << "k = " << fmt(r.slope) << " V/T, floor = " << fmt(r.noise_floor)
          << " V, sensitivity = " << fmt(r.sensitivity) << " +/- " << fmt(r.minimum_field_sigma)
          << " T/sqrt(Hz)" << (r.below_numerical_floor ? " (below numerical floor)" : "") << "\n";
}

void cmd_dynrange(Context& ctx) {
  const auto& c = ctx.config;
  const EnsembleSensor sensor = response_sensor(c);
  const auto grid = numerics::linspace(0.0, c.response.max_field_t,
                                       static_cast<std::size_t>(c.response.points));
  const ResponseCurve curve = response_curve(sensor, c.response.frequency_hz, grid, make_voltage(c),
                                             make_lockin(c), parse_propagation(c.response.propagation));
  io::CsvTable table{{"field_T", "amplitude_V", "standard_error_V"}, {}};
  for (const auto& p : curve.points) table.rows.push_back({p.field_amplitude, p.amplitude, p.standard_error});
  ctx.write_csv("response_curve.csv", table);
  const auto sens = run_sensitivity(ctx, sensor);
  const auto dr = estimate_dynamic_range(curve, sens, c.response.min_prominence);
  Json spacing = Json::array();
  for (std::size_t i = 1; i < dr.peaks.size(); ++i) spacing.push_back(dr.peaks[i] - dr.peaks[i - 1]);
  ctx.summary["quasi_static"] = curve.quasi_static;
  ctx.summary["peaks_t"] = dr.peaks;
  ctx.summary["peak_spacing_t"] = spacing;
  ctx.summary["expected_spacing_t"] =
      std::abs(c.constants.hyperfine_coupling_hz / c.constants.gyromagnetic_ratio_hz_per_t);
  ctx.summary["maximum_field_t"] = dr.maximum_field;
  ctx.summary["minimum_field_t"] = dr.minimum_field;
  ctx.summary["dynamic_range_db"] = dr.dynamic_range;
  ctx.out << dr.peaks.size() << " peaks, b_max = " << fmt(dr.maximum_field)
          << " T, b_min = " << fmt(dr.minimum_field) << " T, dynamic range "
          << fmt(dr.dynamic_range) << " dB\n";
}

void cmd_selftest(Context& ctx) {
  const auto checks = run_selftest(ctx.config.seed);
  io::CsvTable table{{"check", "value", "tolerance", "passed"}, {}};
  Json list = Json::array();
  bool all = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& k = checks[i];
    all = all && k.passed;
    table.rows.push_back({static_cast<double>(i), k.value, k.tolerance, k.passed ? 1.0 : 0.0});
    list.push_back({{"name", k.name}, {"value", k.value}, {"tolerance", k.tolerance}, {"passed", k.passed}});
    ctx.out << (k.passed ? "PASS " : "FAIL ") << k.name << ": " << fmt(k.value) << " (tol "
            << fmt(k.tolerance) << ")\n";
  }
  ctx.write_csv("selftest.csv", table);
  ctx.summary["checks"] = list;
  ctx.summary["all_passed"] = all;
  if (!all) ctx.status = 2;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulator of a driven dissipative two-level quantum magnetometer"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "dqsim_out";
  std::vector<std::string> overrides;
  std::string input;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "top-level RNG seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", overrides, "override section.key=value (repeatable)");

  const std::map<std::string, std::pair<std::string, std::function<void(Context&)>>> commands{
      {"steady", {"analytic and numeric steady state", cmd_steady}},
      {"trace", {"synthesize photodiode voltages to CSV", cmd_trace}},
      {"spectrum", {"FFT and peak fit of a trace", cmd_spectrum}},
      {"scaling", {"resolution and precision against record length", cmd_scaling}},
      {"bandwidth", {"detection bandwidth against pumping rate", cmd_bandwidth}},
      {"sensitivity", {"linear response slope, noise floor and sensitivity", cmd_sensitivity}},
      {"dynrange", {"saturation response curve and dynamic range", cmd_dynrange}},
      {"selftest", {"analytic/numeric cross-checks", cmd_selftest}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    if (name == "spectrum") sub->add_option("--input", input, "trace CSV to analyse instead of synthesizing");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    config = apply_overrides(config, overrides);
    if (seed) config.seed = *seed;
    config.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create output directory " << dir << ": " << ec.message() << "\n";
    return 2;
  }
  const fs::path marker = dir / kIncomplete;
  Context ctx{config, dir, input, out, Json::object(), {}, 0};
  try {
    io::write_file_atomic(marker, name + ": running\n");
    fs::remove(dir / "summary.json");
    io::write_file_atomic(dir / "config_echo.json", config_echo(config));
    commands.at(name).second(ctx);
    Json summary;
    summary["command"] = name;
    summary["seed"] = config.seed;
    summary["config_hash"] = config_hash(config);
    summary["files"] = ctx.files;
    for (auto& [k, v] : ctx.summary.items()) summary[k] = v;
    io::write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
    fs::remove(marker);
    return ctx.status;
  } catch (const Error& e) {
    const bool validation =
        dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e);
    err << "error: " << e.what() << "\n";
    io::write_file_atomic(marker, name + ": failed: " + e.what() + "\n");
    return validation ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    io::write_file_atomic(marker, name + ": failed: " + e.what() + "\n");
    return 2;
  }
}

}  // namespace dqsim
