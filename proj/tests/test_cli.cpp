#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "bekf/cli.hpp"

using namespace bekf;
using namespace bekf::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bekf_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
  return p;
}

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

const char* kSmall =
    "# short case 2 run\n"
    "[experiment]\n"
    "horizon = 0.4\n"
    "n_runs = 3\n"
    "seed = 5\n"
    "[initial]\n"
    "mu = 8 0\n"
    "sigma0 = 0.01 0; 0 0.01\n";

}  // namespace

TEST_CASE("config grammar") {
  const ExperimentConfig c = parse(
      "[experiment]\n"
      "model = example   # trailing comment\n"
      "horizon = 2.5\n"
      "n_runs = 7\n"
      "seed = 0x10\n"
      "threads = 2\n"
      "\n"
      "[initial]\n"
      "mu = 1, 2\n"
      "sigma0 = 1 0.5; 0.5 2\n"
      "[filters]\n"
      "ekf = off\n"
      "[bound]\n"
      "certificate_stride = 5\n"
      "integrator = rk4\n"
      "s_objective = trace\n");
  CHECK(c.horizon == 2.5);
  CHECK(c.n_runs == 7);
  CHECK(c.seed == 16);
  CHECK(c.threads == 2);
  CHECK(c.mu == Eigen::Vector2d(1, 2));
  CHECK(c.sigma0(0, 1) == 0.5);
  CHECK(c.sigma0(1, 1) == 2.0);
  CHECK(c.run_bekf);
  CHECK_FALSE(c.run_ekf);
  CHECK(c.certificate_stride == 5);
  CHECK(c.integrator == SigmaIntegrator::rk4);
  CHECK(c.s_objective == SObjective::trace);
}

TEST_CASE("config errors carry the line number") {
  const auto line_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("[experiment]\nbogus = 1\n") == 2);
  CHECK(line_of("[nope]\n") == 1);
  CHECK(line_of("horizon = 1\n") == 1);
  CHECK(line_of("[experiment]\nhorizon = 1\nhorizon = 2\n") == 3);
  CHECK(line_of("[experiment]\nhorizon = abc\n") == 2);
  CHECK(line_of("[experiment]\nn_runs = 1.5\n") == 2);
  CHECK(line_of("[experiment]\nhorizon =\n") == 2);
  CHECK(line_of("[initial]\nsigma0 = 1 2; 3 4\n") == 2);
  CHECK(line_of("[initial]\nsigma0 = 1 2; 3\n") == 2);
  CHECK(line_of("[bound]\nintegrator = midpoint\n") == 2);
  CHECK(line_of("[experiment\n") == 1);
  CHECK(line_of("[experiment]\nno equals sign\n") == 2);
  // Semantic errors surface after parsing.
  CHECK(line_of("[experiment]\nobs_period = 0.015\n") == 0);
  CHECK(line_of("[initial]\nmu = 1 2 3\nsigma0 = 1 0 0; 0 1 0; 0 0 1\n") == 0);
  CHECK(line_of("[experiment]\nmodel = linear\n") == 0);
}

TEST_CASE("describe_config round trips") {
  ExperimentConfig c = parse(
      "[experiment]\nmodel = linear\nhorizon = 0.6\nseed = 99\n"
      "[initial]\nmu = 0.1 -0.2\nsigma0 = 0.3 0.1; 0.1 0.7\n"
      "[linear]\na = -1 0.3; -0.3 -1\nb = 0.1; 0.2\nh = 1 0\nr = 0.01\n");
  const ExperimentConfig d = parse(describe_config(c));
  CHECK(describe_config(d) == describe_config(c));
  CHECK(d.linear_a == c.linear_a);
  CHECK(d.sigma0 == c.sigma0);
  CHECK(d.mu == c.mu);
}

TEST_CASE("frames command") {
  const fs::path dir = scratch("frames");
  std::ostringstream out, err;
  REQUIRE(cmd_frames(2, dir, out, err) == exit_ok);
  const std::string text = slurp(dir / "frames_N2.txt");
  for (int i = 0; i < 4; ++i) {
    CHECK(count(text, "\nP " + std::to_string(i) + "\n") == 1);
    CHECK(count(text, "\nU " + std::to_string(i) + "\n") == 1);
  }
  CHECK(count(text, "\nP 4\n") == 0);
  CHECK(count(text, "\nT 0\n") == 1);
  CHECK(count(text, "\nL\n") == 1);
  CHECK(text.find("0.70710678118654746") != std::string::npos);

  REQUIRE(cmd_frames(2, dir, out, err) == exit_ok);
  CHECK(slurp(dir / "frames_N2.txt") == text);

  CHECK(cmd_frames(0, dir, out, err) == exit_usage);
  const fs::path blocker = write_file(scratch("blocker") / "file", "x");
  CHECK(cmd_frames(2, blocker / "sub", out, err) == exit_io);
}

TEST_CASE("run command writes csv and metadata") {
  const fs::path cfg = write_file(scratch("run") / "case2.cfg", kSmall);
  const fs::path out1 = scratch("run_out1"), out2 = scratch("run_out2");
  std::ostringstream out, err;
  REQUIRE(cmd_run(cfg, out1, out, err) == exit_ok);
  REQUIRE(cmd_run(cfg, out2, out, err) == exit_ok);
  const std::string csv = slurp(out1 / "results.csv");
  CHECK(csv == slurp(out2 / "results.csv"));
  CHECK(slurp(out1 / "metadata.txt") == slurp(out2 / "metadata.txt"));
  CHECK(count(csv, ",bekf,") == 41);
  CHECK(count(csv, ",ekf,") == 41);
  const std::string meta = slurp(out1 / "metadata.txt");
  CHECK(meta.find("seed 5") != std::string::npos);
  CHECK(meta.find("sigma0 = 0.01 0; 0 0.01") != std::string::npos);
  CHECK(meta.find("eigen ") != std::string::npos);
}

TEST_CASE("run command with a single zero-length run") {
  const fs::path cfg = write_file(scratch("single") / "c.cfg", "[experiment]\nhorizon = 0\nn_runs = 1\n");
  const fs::path dir = scratch("single_out");
  std::ostringstream out, err;
  REQUIRE(cmd_run(cfg, dir, out, err) == exit_ok);
  const std::string csv = slurp(dir / "results.csv");
  CHECK(count(csv, "\n0,") == 2);
  CHECK(count(csv, "\n") == 3);
}

TEST_CASE("run command exit codes") {
  std::ostringstream out, err;
  const fs::path bad = write_file(scratch("bad") / "bad.cfg", "[experiment]\nbogus = 1\n");
  CHECK(cmd_run(bad, scratch("bad_out"), out, err) == exit_usage);
  CHECK(err.str().find("line 2") != std::string::npos);
  CHECK(cmd_run(scratch("missing") / "none.cfg", scratch("missing_out"), out, err) == exit_io);
  const fs::path good = write_file(scratch("good") / "c.cfg", kSmall);
  const fs::path blocker = write_file(scratch("blocker2") / "file", "x");
  CHECK(cmd_run(good, blocker / "sub", out, err) == exit_io);

  ::setenv("BEKF_THREADS", "zero", 1);
  CHECK(cmd_run(good, scratch("env_out"), out, err) == exit_usage);
  ::unsetenv("BEKF_THREADS");

  const fs::path failing = write_file(scratch("fail") / "c.cfg",
                                      "[experiment]\nmodel = linear\nhorizon = 0.4\nn_runs = 2\n"
                                      "[filters]\nbekf = false\n"
                                      "[linear]\na = 0 0; 0 0\nb = 0; 0\nh = 1 0\nr = 0\n");
  std::ostringstream ferr;
  CHECK(cmd_run(failing, scratch("fail_out"), out, ferr) == exit_runtime);
  CHECK(ferr.str().find("run 0") != std::string::npos);
}

TEST_CASE("thread override from the environment") {
  ::unsetenv("BEKF_THREADS");
  CHECK(threads_from_env(3) == 3);
  ::setenv("BEKF_THREADS", "2", 1);
  CHECK(threads_from_env(3) == 2);
  ::setenv("BEKF_THREADS", "-1", 1);
  CHECK_THROWS_AS(threads_from_env(3), std::invalid_argument);
  ::setenv("BEKF_THREADS", "4x", 1);
  CHECK_THROWS_AS(threads_from_env(3), std::invalid_argument);
  ::unsetenv("BEKF_THREADS");
}

TEST_CASE("validate command") {
  std::ostringstream out, err;
  CHECK(cmd_validate("frames", out, err) == exit_ok);
  CHECK(out.str().find("FAIL") == std::string::npos);
  std::ostringstream out2;
  CHECK(cmd_validate("linear-equivalence", out2, err) == exit_ok);
  CHECK(cmd_validate("nope", out, err) == exit_usage);
  CHECK(validation_suites().size() == 5);
}
