#include <iostream>

#include <CLI11.hpp>

#include "bekf/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bound-based extended Kalman filter"};
  app.require_subcommand(1);

  int dim = 2;
  std::string frames_out;
  auto* frames = app.add_subcommand("frames", "Write the P-frame, U/T generators and Gram matrix for dimension N");
  frames->add_option("--dim", dim, "State dimension")->required();
  frames->add_option("--out", frames_out, "Output directory")->required();

  std::string config, run_out;
  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment from a config file");
  run->add_option("--config", config, "Config file")->required();
  run->add_option("--out", run_out, "Output directory")->required();

  std::string suite;
  auto* validate = app.add_subcommand("validate", "Run a built-in validation suite");
  validate->add_option("--suite", suite, "Suite name")->required()->check(CLI::IsMember(bekf::cli::validation_suites()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return bekf::cli::exit_usage;
  }

  if (*frames) return bekf::cli::cmd_frames(dim, frames_out, std::cout, std::cerr);
  if (*run) return bekf::cli::cmd_run(config, run_out, std::cout, std::cerr);
  return bekf::cli::cmd_validate(suite, std::cout, std::cerr);
}
