#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "dqsim_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run run(const std::string& args) {
  const char* cli = std::getenv("DQSIM_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "DQSIM_CLI is not set");
  static int counter = 0;
  const fs::path out = scratch() / ("stdout" + std::to_string(counter));
  const fs::path err = scratch() / ("stderr" + std::to_string(counter++));
  const std::string cmd = std::string(cli) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

}  // namespace

TEST_CASE("steady without drive prints P0 = 1") {
  const fs::path dir = scratch() / "steady";
  const Run r = run("steady --out " + dir.string() + " --set sensor.drive_amplitude_t=0");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("P0 (analytic) = 1\n") != std::string::npos);
  CHECK(r.out.find("P0 (numeric)  = 1\n") != std::string::npos);
  CHECK(fs::exists(dir / "steady.csv"));
  CHECK(fs::exists(dir / "config_echo.json"));
  CHECK(!fs::exists(dir / "INCOMPLETE"));
}

TEST_CASE("selftest passes") {
  const Run r = run("selftest --out " + (scratch() / "selftest").string());
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("spectrum of a generated 9 Hz trace") {
  const fs::path dir = scratch() / "spectrum";
  const Run r = run("spectrum --out " + dir.string());
  REQUIRE(r.code == 0);
  const auto fit = summary(dir)["fit"];
  const double f = fit["center_frequency_hz"], sigma = fit["sigma_frequency_hz"];
  CHECK(sigma > 0.0);
  CHECK(std::abs(f - 9.0) < 3.0 * sigma);
  CHECK(fs::exists(dir / "spectrum.csv"));
}

TEST_CASE("spectrum of a trace file") {
  const fs::path t = scratch() / "trace_in";
  REQUIRE(run("trace --out " + t.string()).code == 0);
  const fs::path dir = scratch() / "spectrum_in";
  REQUIRE(run("spectrum --out " + dir.string() + " --input " + (t / "trace.csv").string()).code == 0);
  const fs::path direct = scratch() / "spectrum_direct";
  REQUIRE(run("spectrum --out " + direct.string()).code == 0);
  CHECK(slurp(dir / "spectrum.csv") == slurp(direct / "spectrum.csv"));
}

TEST_CASE("config echo reproduces the outputs") {
  const fs::path a = scratch() / "echo_a", b = scratch() / "echo_b";
  REQUIRE(run("trace --out " + a.string() + " --seed 77 --set experiment.trace.duration_s=20").code == 0);
  REQUIRE(run("trace --out " + b.string() + " --config " + (a / "config_echo.json").string()).code == 0);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "config_echo.json") == slurp(b / "config_echo.json"));
  CHECK(summary(a)["seed"] == 77);

  const fs::path c = scratch() / "echo_c";
  REQUIRE(run("trace --out " + c.string() + " --seed 78 --set experiment.trace.duration_s=20").code == 0);
  CHECK(slurp(a / "trace.csv") != slurp(c / "trace.csv"));
}

TEST_CASE("validation errors exit with 1") {
  Run r = run("steady --out " + (scratch() / "bad1").string() + " --set sensor.amplitude_damping_rat=1");
  CHECK(r.code == 1);
  CHECK(r.err.find("sensor.amplitude_damping_rat") != std::string::npos);

  r = run("steady --out " + (scratch() / "bad2").string() + " --set noise.white_noise_density=-1");
  CHECK(r.code == 1);
  CHECK(r.err.find("noise.white_noise_density") != std::string::npos);

  const fs::path cfg = scratch() / "typo.json";
  std::ofstream(cfg) << R"({"sensor": {"static_field_t": 0.0, "colour": 1}})";
  r = run("steady --out " + (scratch() / "bad3").string() + " --config " + cfg.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("colour") != std::string::npos);

  CHECK(run("nonsense").code == 1);
}

TEST_CASE("runtime failures exit with 2 and leave a marker") {
  const fs::path dir = scratch() / "nopeak";
  const Run r = run("spectrum --out " + dir.string() +
                    " --set experiment.spectrum.band_low_hz=12 --set experiment.spectrum.band_high_hz=14");
  CHECK(r.code == 2);
  CHECK(fs::exists(dir / "INCOMPLETE"));
  CHECK(!fs::exists(dir / "summary.json"));
  CHECK(slurp(dir / "INCOMPLETE").find("failed") != std::string::npos);
}
