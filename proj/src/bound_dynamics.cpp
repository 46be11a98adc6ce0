#include "bekf/bound_dynamics.hpp"

#include <cmath>

#include "bekf/lp.hpp"

namespace bekf {

namespace {

Eigen::MatrixXd svec_rows(std::span<const SymMatrix> members) { return svec_columns(members).transpose(); }

}  // namespace

const char* to_string(SigmaIntegrator i) { return i == SigmaIntegrator::euler ? "euler" : "rk4"; }
const char* to_string(SObjective o) { return o == SObjective::sigma ? "sigma" : "trace"; }

SigmaDotPolytope sdot_polytope(std::span<const Certificate> certs, const SymMatrix& sigma, const PFrame& frame) {
  if (certs.size() != frame.members.size())
    throw std::invalid_argument("sdot_polytope: need one certificate per frame member");
  SigmaDotPolytope poly;
  poly.dim_sym = frame.dim_sym;
  poly.normals = frame.members;
  poly.rhs.resize(static_cast<Eigen::Index>(certs.size()));
  for (size_t i = 0; i < certs.size(); ++i) {
    if (certs[i].p_index != static_cast<int>(i)) throw std::invalid_argument("sdot_polytope: certificates out of order");
    poly.rhs(static_cast<Eigen::Index>(i)) = inner(certs[i].q_matrix, sigma) + certs[i].q_scalar;
  }
  return poly;
}

Eigen::VectorXd bound_direction_values(const SigmaDotPolytope& poly, std::span<const SymMatrix> t_gens) {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.constraint_matrix = svec_rows(poly.normals);
  lp.constraint_rhs = poly.rhs;
  Eigen::VectorXd t(static_cast<Eigen::Index>(t_gens.size()));
  for (size_t i = 0; i < t_gens.size(); ++i) {
    lp.objective = svec(t_gens[i]);
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
      throw FrameViolation(static_cast<int>(i), std::string("bound_direction_values: LP for T_") +
                                                    std::to_string(i) + " is " + to_string(sol.status));
    t(static_cast<Eigen::Index>(i)) = sol.value;
  }
  return t;
}

Eigen::VectorXd select_s(const Eigen::MatrixXd& gram_l, const Eigen::VectorXd& t, const SymMatrix& sigma_tilde,
                         std::span<const SymMatrix> t_gens, const SelectOptions& options) {
  const int dim = sigma_tilde.dim();
  const int n = sym_dim(dim);
  if (static_cast<int>(t_gens.size()) == n) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram_l);
    if (lu.isInvertible()) return lu.solve(t);
  }

  SymMatrix weight = options.objective == SObjective::trace
                         ? SymMatrix::identity(dim)
                         : sigma_tilde + (1e-9 * (1.0 + sigma_tilde.trace())) * SymMatrix::identity(dim);
  const Eigen::MatrixXd tcols = svec_columns(t_gens);
  LinearProgram lp;
  lp.sense = Sense::minimize;
  lp.objective = svec(weight);
  lp.constraint_matrix = -tcols.transpose();
  lp.constraint_rhs = -t;
  lp.lower = Eigen::VectorXd::Constant(n, -options.s_max);
  lp.upper = Eigen::VectorXd::Constant(n, options.s_max);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error(std::string("select_s: LP is ") + to_string(sol.status));
  return tcols.completeOrthogonalDecomposition().solve(sol.x);
}

BoundDerivative sigma_dot_bound(std::span<const Certificate> certs, const SymMatrix& sigma_tilde,
                                const Frames& frames, const SelectOptions& options) {
  const SigmaDotPolytope poly = sdot_polytope(certs, sigma_tilde, frames.p);
  BoundDerivative out;
  out.t = bound_direction_values(poly, frames.dual.t_gens);
  out.s = select_s(frames.dual.gram_l, out.t, sigma_tilde, frames.dual.t_gens, options);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(sigma_tilde.dim(), sigma_tilde.dim());
  for (size_t i = 0; i < frames.dual.t_gens.size(); ++i)
    d += out.s(static_cast<Eigen::Index>(i)) * frames.dual.t_gens[i].matrix();
  out.matrix = SymMatrix(d);
  return out;
}

Eigen::VectorXd rk4_state_step(const SystemModel& model, const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd k1 = model.drift(x);
  const Eigen::VectorXd k2 = model.drift(x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = model.drift(x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = model.drift(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

BoundPropagator::BoundPropagator(const SystemModel& model, const Frames& frames, BoundConfig config)
    : model_(&model), frames_(&frames), config_(std::move(config)) {
  if (!(config_.step > 0.0)) throw std::invalid_argument("BoundPropagator: step must be positive");
  if (config_.certificate_stride < 1) throw std::invalid_argument("BoundPropagator: stride must be >= 1");
  if (frames.p.dim_state != model.dim_state) throw std::invalid_argument("BoundPropagator: frame dimension mismatch");
}

std::vector<Certificate> BoundPropagator::certificates(const Eigen::VectorXd& x_tilde,
                                                       const SymMatrix& sigma_tilde) const {
  try {
    return certify_frame(*model_, x_tilde, sigma_tilde, frames_->p, config_.method, config_.sos);
  } catch (const CertificateInfeasible& e) {
    throw PropagationError(std::string("certificate for P_") + std::to_string(e.p_index()) + " failed (" +
                               to_string(e.status()) + "): " + e.what(),
                           x_tilde, sigma_tilde, e.p_index());
  }
}

BoundDerivative BoundPropagator::derivative(const Eigen::VectorXd& x_tilde, const SymMatrix& sigma_tilde) const {
  const std::vector<Certificate> certs = certificates(x_tilde, sigma_tilde);
  return sigma_dot_bound(certs, sigma_tilde, *frames_, config_.select);
}

SymMatrix BoundPropagator::euler_rate(const Eigen::VectorXd& x_tilde, const SymMatrix& sigma_tilde) {
  if (cache_.empty() || steps_since_refresh_ >= config_.certificate_stride) {
    cache_ = certificates(x_tilde, sigma_tilde);
    steps_since_refresh_ = 0;
  }
  ++steps_since_refresh_;
  return sigma_dot_bound(cache_, sigma_tilde, *frames_, config_.select).matrix;
}

void BoundPropagator::step(Eigen::VectorXd& x_tilde, SymMatrix& sigma_tilde, double h) {
  if (config_.integrator == SigmaIntegrator::euler) {
    const SymMatrix rate = euler_rate(x_tilde, sigma_tilde);
    x_tilde = rk4_state_step(*model_, x_tilde, h);
    sigma_tilde = floor_eigenvalues(sigma_tilde + h * rate);
    return;
  }
  // Joint RK4 on (x~, Sigma~); stage covariances are floored before certifying.
  const auto rate = [&](const Eigen::VectorXd& x, const SymMatrix& s) {
    return derivative(x, floor_eigenvalues(s)).matrix;
  };
  const Eigen::VectorXd& x = x_tilde;
  const Eigen::VectorXd kx1 = model_->drift(x);
  const SymMatrix ks1 = rate(x, sigma_tilde);
  const Eigen::VectorXd x2 = x + 0.5 * h * kx1;
  const Eigen::VectorXd kx2 = model_->drift(x2);
  const SymMatrix ks2 = rate(x2, sigma_tilde + (0.5 * h) * ks1);
  const Eigen::VectorXd x3 = x + 0.5 * h * kx2;
  const Eigen::VectorXd kx3 = model_->drift(x3);
  const SymMatrix ks3 = rate(x3, sigma_tilde + (0.5 * h) * ks2);
  const Eigen::VectorXd x4 = x + h * kx3;
  const Eigen::VectorXd kx4 = model_->drift(x4);
  const SymMatrix ks4 = rate(x4, sigma_tilde + h * ks3);
  x_tilde = x + (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
  sigma_tilde = floor_eigenvalues(sigma_tilde + (h / 6.0) * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4));
}

void BoundPropagator::propagate(Eigen::VectorXd& x_tilde, SymMatrix& sigma_tilde, double delta_t) {
  if (delta_t < 0.0) throw std::invalid_argument("propagate: negative interval");
  double remaining = delta_t;
  while (remaining > 1e-12 * config_.step) {
    const double h = remaining < config_.step * (1.0 + 1e-9) ? remaining : config_.step;
    step(x_tilde, sigma_tilde, h);
    remaining -= h;
  }
}

void BoundPropagator::reset() {
  cache_.clear();
  steps_since_refresh_ = 0;
}

std::pair<Eigen::VectorXd, SymMatrix> propagate(const SystemModel& model, const Eigen::VectorXd& x_tilde,
                                                const SymMatrix& sigma_tilde, double delta_t, const Frames& frames,
                                                const BoundConfig& config) {
  BoundPropagator prop(model, frames, config);
  Eigen::VectorXd x = x_tilde;
  SymMatrix s = sigma_tilde;
  prop.propagate(x, s, delta_t);
  return {x, s};
}

}  // namespace bekf
