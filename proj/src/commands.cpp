#include <Eigen/Core>
#include <fstream>
#include <ostream>

#include "bekf/cli.hpp"

#ifndef BEKF_VERSION
#define BEKF_VERSION "unknown"
#endif

namespace bekf::cli {

namespace {

bool prepare_dir(const std::filesystem::path& dir, std::ostream& err) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    err << "error: cannot create output directory " << dir.string() << (ec ? ": " + ec.message() : "") << "\n";
    return false;
  }
  return true;
}

}  // namespace

int cmd_frames(int dim, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  if (dim < 1) {
    err << "error: --dim must be >= 1\n";
    return exit_usage;
  }
  if (dim > 6) {
    err << "error: --dim above 6 is not supported (dual generator enumeration grows combinatorially)\n";
    return exit_usage;
  }
  if (!prepare_dir(out_dir, err)) return exit_io;
  Frames frames;
  try {
    frames = build_frames(dim);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  const auto path = out_dir / ("frames_N" + std::to_string(dim) + ".txt");
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot write " << path.string() << "\n";
    return exit_io;
  }
  write_frames(f, frames);
  f.close();
  if (!f) {
    err << "error: write to " << path.string() << " failed\n";
    return exit_io;
  }
  out << "wrote " << path.string() << ": " << frames.p.members.size() << " P, " << frames.dual.u_gens.size() << " U, "
      << frames.dual.t_gens.size() << " T\n";
  return exit_ok;
}

int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, std::ostream& out,
            std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error in " << config_path.string() << ": " << e.what() << "\n";
    return exit_usage;
  } catch (const std::ios_base::failure&) {
    err << "error: cannot read " << config_path.string() << "\n";
    return exit_io;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return exit_usage;
  }
  ExperimentConfig effective = config;
  try {
    effective.threads = threads_from_env(config.threads);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }

  if (!prepare_dir(out_dir, err)) return exit_io;
  const auto csv_path = out_dir / "results.csv";
  const auto meta_path = out_dir / "metadata.txt";
  std::ofstream csv(csv_path, std::ios::binary), meta(meta_path, std::ios::binary);
  if (!csv || !meta) {
    err << "error: cannot write into " << out_dir.string() << "\n";
    return exit_io;
  }

  ExperimentResult result;
  try {
    result = run_experiment(effective);
  } catch (const ExperimentFailure& e) {
    err << "experiment failed at run " << e.run_index() << ": " << e.what() << "\n";
    return exit_runtime;
  } catch (const std::exception& e) {
    err << "experiment failed: " << e.what() << "\n";
    return exit_runtime;
  }

  write_csv(csv, result);
  meta << "bekf " << BEKF_VERSION << "\n"
       << "eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n"
       << "compiler " << __VERSION__ << "\n"
       << "seed " << config.seed << "\n"
       << "runs " << result.n_runs << "\n"
       << "aborted_runs " << result.aborted_runs.size() << "\n";
  for (size_t i = 0; i < result.aborted_runs.size(); ++i)
    meta << "aborted " << result.aborted_runs[i] << " " << result.abort_reasons[i] << "\n";
  meta << "certificate_stride " << config.certificate_stride
       << (config.certificate_stride > 1 ? " (heuristic: certificates are reused away from their anchor)" : "") << "\n"
       << "\n"
       << describe_config(config);
  csv.close();
  meta.close();
  if (!csv || !meta) {
    err << "error: writing results failed\n";
    return exit_io;
  }
  out << "wrote " << csv_path.string() << " and " << meta_path.string() << " (" << result.n_runs << " runs, "
      << result.aborted_runs.size() << " aborted)\n";
  return exit_ok;
}

int cmd_validate(const std::string& suite, std::ostream& out, std::ostream& err) {
  std::vector<CheckResult> results;
  try {
    results = run_validation_suite(suite);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: suite " << suite << " aborted: " << e.what() << "\n";
    return exit_runtime;
  }
  bool all = true;
  for (const CheckResult& r : results) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) out << "  (" << r.detail << ")";
    out << "\n";
    all = all && r.pass;
  }
  out << suite << ": " << (all ? "all checks passed" : "some checks failed") << "\n";
  return all ? exit_ok : exit_runtime;
}

}  // namespace bekf::cli
