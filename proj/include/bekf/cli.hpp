#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bekf/cone_frames.hpp"
#include "bekf/simulation.hpp"

namespace bekf::cli {

enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_io = 3, exit_runtime = 4 };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what) : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Flat `key = value` lines grouped under `[section]` headers; `#` starts a
/// comment. Matrices are rows separated by `;`. Unknown sections or keys are
/// rejected. See README for the key list.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form of a config; parse_config(describe_config(c)) == c.
std::string describe_config(const ExperimentConfig& config);

/// Rows of whitespace-separated decimals, 17 significant digits.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
void write_frames(std::ostream& out, const Frames& frames);

/// Thread count from BEKF_THREADS, or `fallback` when unset. Throws
/// std::invalid_argument on a malformed value.
int threads_from_env(int fallback);

int cmd_frames(int dim, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, std::ostream& out,
            std::ostream& err);
int cmd_validate(const std::string& suite, std::ostream& out, std::ostream& err);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

const std::vector<std::string>& validation_suites();
/// Throws std::invalid_argument for an unknown suite.
std::vector<CheckResult> run_validation_suite(const std::string& suite);

}  // namespace bekf::cli
