#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bekf/certificates.hpp"
#include "bekf/cone_frames.hpp"
#include "bekf/sym_matrix.hpp"
#include "bekf/system_model.hpp"

namespace bekf {

/// { D : Tr{normals[i] D} <= rhs(i) } with rhs(i) = Tr{Q_i Sigma} + q_i.
struct SigmaDotPolytope {
  int dim_sym = 0;
  std::vector<SymMatrix> normals;
  Eigen::VectorXd rhs;
};

/// matrix = sum_i s_i T_i; t_i = max over the polytope of Tr{T_i D}.
struct BoundDerivative {
  Eigen::VectorXd s;
  SymMatrix matrix;
  Eigen::VectorXd t;
};

/// The polytope admits an unbounded direction, which a valid P frame rules out.
class FrameViolation : public std::runtime_error {
 public:
  FrameViolation(int t_index, const std::string& what) : std::runtime_error(what), t_index_(t_index) {}
  int t_index() const { return t_index_; }

 private:
  int t_index_;
};

/// A certificate could not be computed while integrating the bound.
class PropagationError : public std::runtime_error {
 public:
  PropagationError(const std::string& what, Eigen::VectorXd x_tilde, SymMatrix sigma_tilde, int p_index)
      : std::runtime_error(what), x_tilde(std::move(x_tilde)), sigma_tilde(std::move(sigma_tilde)), p_index(p_index) {}
  Eigen::VectorXd x_tilde;
  SymMatrix sigma_tilde;
  int p_index;
};

SigmaDotPolytope sdot_polytope(std::span<const Certificate> certs, const SymMatrix& sigma, const PFrame& frame);

Eigen::VectorXd bound_direction_values(const SigmaDotPolytope& poly, std::span<const SymMatrix> t_gens);

enum class SObjective {
  /// minimize Tr{Sigma~ Sigma_bar_dot}, the rate of change of Tr{Sigma~^2} / 2
  sigma,
  /// minimize Tr{Sigma_bar_dot}
  trace,
};

struct SelectOptions {
  SObjective objective = SObjective::sigma;
  double s_max = 1e6;
};

/// Square nonsingular L: s = L^-1 t. Otherwise the cheapest D = sum s_i T_i
/// with Tr{T_j D} >= t_j is found by LP and s is its minimum-norm expansion.
Eigen::VectorXd select_s(const Eigen::MatrixXd& gram_l, const Eigen::VectorXd& t, const SymMatrix& sigma_tilde,
                         std::span<const SymMatrix> t_gens, const SelectOptions& options = {});

BoundDerivative sigma_dot_bound(std::span<const Certificate> certs, const SymMatrix& sigma_tilde,
                                const Frames& frames, const SelectOptions& options = {});

enum class SigmaIntegrator { euler, rk4 };

struct BoundConfig {
  double step = 0.01;
  SigmaIntegrator integrator = SigmaIntegrator::euler;
  /// Certificates are recomputed every `certificate_stride` steps.
  int certificate_stride = 1;
  CertificateMethod method = CertificateMethod::automatic;
  SosOptions sos{};
  SelectOptions select{};
};

const char* to_string(SigmaIntegrator i);
const char* to_string(SObjective o);

/// Integrates d x~ = f(x~) dt (RK4) together with d Sigma~ = Sigma_bar_dot dt.
/// Holds the certificate cache used when certificate_stride > 1, so one
/// instance belongs to one trajectory.
class BoundPropagator {
 public:
  BoundPropagator(const SystemModel& model, const Frames& frames, BoundConfig config = {});

  const BoundConfig& config() const { return config_; }

  /// Fresh certificates at x_tilde. Throws PropagationError.
  std::vector<Certificate> certificates(const Eigen::VectorXd& x_tilde, const SymMatrix& sigma_tilde) const;
  BoundDerivative derivative(const Eigen::VectorXd& x_tilde, const SymMatrix& sigma_tilde) const;

  /// One step of length h <= config.step.
  void step(Eigen::VectorXd& x_tilde, SymMatrix& sigma_tilde, double h);
  /// Steps of config.step, the last one shortened to land on delta_t.
  void propagate(Eigen::VectorXd& x_tilde, SymMatrix& sigma_tilde, double delta_t);

  /// Drop cached certificates.
  void reset();

 private:
  SymMatrix euler_rate(const Eigen::VectorXd& x_tilde, const SymMatrix& sigma_tilde);

  const SystemModel* model_;
  const Frames* frames_;
  BoundConfig config_;
  std::vector<Certificate> cache_;
  long steps_since_refresh_ = 0;
};

std::pair<Eigen::VectorXd, SymMatrix> propagate(const SystemModel& model, const Eigen::VectorXd& x_tilde,
                                                const SymMatrix& sigma_tilde, double delta_t, const Frames& frames,
                                                const BoundConfig& config = {});

/// Classic RK4 step of x' = f(x).
Eigen::VectorXd rk4_state_step(const SystemModel& model, const Eigen::VectorXd& x, double h);

}  // namespace bekf
