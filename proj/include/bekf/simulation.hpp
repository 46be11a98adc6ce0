#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bekf/bound_dynamics.hpp"
#include "bekf/random.hpp"
#include "bekf/sym_matrix.hpp"
#include "bekf/system_model.hpp"

namespace bekf {

/// Limit-cycle example: f(x) = (A_u / m(x) + A_s) x with m(x) = (1 + x'x) / 25,
/// g = diag(1/5, 1/5), H = [1 0], R = 1e-4.
SystemModel example_model();

struct SdePath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::uint64_t seed = 0;
  std::uint32_t substream_a = 0;
  std::uint32_t substream_b = 0;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(long step, const std::string& what) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Euler-Maruyama: x_{k+1} = x_k + f(x_k) dt + g(x_k) sqrt(dt) xi_k.
SdePath simulate_sde(const SystemModel& model, const Eigen::VectorXd& x0, double micro_step, double horizon,
                     PhiloxStream& rng);

/// y = H x + v with v ~ N(0, R).
Eigen::VectorXd observe(const Eigen::VectorXd& x, const SystemModel& model, PhiloxStream& rng);

/// sqrt(e' Sigma^-1 e / N), with Sigma regularized by 1e-12 I.
double normalized_error(const Eigen::VectorXd& e_tilde, const SymMatrix& sigma);

struct ExperimentConfig {
  /// "example" or "linear" (dx = A x dt + B dw, y = H x + v, v ~ (0, R)).
  std::string model = "example";
  Eigen::MatrixXd linear_a, linear_b, linear_h, linear_r;

  double horizon = 10.0;
  double obs_period = 0.2;
  double micro_step = 1e-3;
  double bound_step = 0.01;
  long n_runs = 500;
  std::uint64_t seed = 1;
  Eigen::VectorXd mu = Eigen::Vector2d(8.0, 0.0);
  SymMatrix sigma0 = 0.5 * SymMatrix::identity(2);

  bool run_bekf = true;
  bool run_ekf = true;
  int certificate_stride = 1;
  SigmaIntegrator integrator = SigmaIntegrator::euler;
  SObjective s_objective = SObjective::sigma;
  int sos_half_degree = 0;
  /// 0 leaves the OpenMP default.
  int threads = 0;

  /// Throws std::invalid_argument.
  void check() const;
  long num_steps() const;
  long steps_per_observation() const;
  long micro_per_step() const;
};

SystemModel model_from_config(const ExperimentConfig& config);

struct FilterCurves {
  std::string name;
  // One entry per bound-integration step, post-update at observation times.
  std::vector<double> mean_norm_err;
  std::vector<double> trace_bound_mean;
  std::vector<double> trace_sample_mse;
  // One entry per observation time.
  std::vector<SymMatrix> obs_bound_mean;
  std::vector<SymMatrix> obs_sample_mse;
  std::vector<SymMatrix> obs_prior_bound_mean;
  std::vector<SymMatrix> obs_prior_sample_mse;
};

struct ExperimentResult {
  std::vector<double> times;
  std::vector<double> obs_times;
  std::vector<FilterCurves> filters;
  long n_runs = 0;
  std::vector<long> aborted_runs;
  std::vector<std::string> abort_reasons;

  const FilterCurves* find(const std::string& name) const;
};

class ExperimentFailure : public std::runtime_error {
 public:
  ExperimentFailure(long run_index, const std::string& what) : std::runtime_error(what), run_index_(run_index) {}
  long run_index() const { return run_index_; }

 private:
  long run_index_;
};

/// Episode k draws its truth, observation and initial-error noise from the
/// Philox substreams (k, 0), (k, 1), (k, 2) of config.seed, so results do not
/// depend on thread scheduling or on which filters are enabled. Throws
/// ExperimentFailure when more than 1% of runs abort.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const SystemModel& model);
ExperimentResult run_experiment_serial(const ExperimentConfig& config, const SystemModel& model);

/// time, filter, mean_norm_err, trace_bound_mean, trace_sample_mse; 10 significant digits.
void write_csv(std::ostream& out, const ExperimentResult& result);

}  // namespace bekf
