#include "bekf/filter.hpp"

#include <cmath>
#include <limits>

namespace bekf {

GainResult kalman_gain(const SymMatrix& prior, const Eigen::VectorXd& estimate, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& h, const Eigen::MatrixXd& r, double max_condition) {
  const Eigen::MatrixXd& p = prior.matrix();
  const Eigen::MatrixXd ph = p * h.transpose();
  Eigen::MatrixXd s = h * ph + r;
  s = 0.5 * (s + s.transpose());

  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues();
  const double lo = ev.size() ? ev.minCoeff() : 1.0;
  // Conditioning relative to the size of the terms forming S.
  const double scale = h.squaredNorm() * p.norm() + r.norm();
  const double hi = std::max(ev.size() ? ev.maxCoeff() : 1.0, scale);
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (!(cond <= max_condition) || llt.info() != Eigen::Success)
    throw SingularInnovation(cond, "innovation covariance is singular (condition number " + std::to_string(cond) + ")");

  GainResult out;
  out.gain = llt.solve(ph.transpose()).transpose();
  out.innovation = y - h * estimate;
  return out;
}

SymMatrix joseph_update(const SymMatrix& prior, const Eigen::MatrixXd& gain, const Eigen::MatrixXd& h,
                        const Eigen::MatrixXd& r) {
  const Eigen::Index n = prior.dim();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - gain * h;
  return SymMatrix(a * prior.matrix() * a.transpose() + gain * r * gain.transpose());
}

FilterState measurement_update(const FilterState& state, const Eigen::VectorXd& y, const Eigen::MatrixXd& h,
                               const Eigen::MatrixXd& r) {
  const GainResult g = kalman_gain(state.mse_bound, state.estimate, y, h, r);
  return FilterState{state.estimate + g.gain * g.innovation, joseph_update(state.mse_bound, g.gain, h, r), state.time};
}

FilterState bekf_time_update(const FilterState& state, double delta_t, BoundPropagator& propagator) {
  FilterState out = state;
  propagator.propagate(out.estimate, out.mse_bound, delta_t);
  out.time += delta_t;
  return out;
}

FilterState bekf_measurement_update(const FilterState& state, const Eigen::VectorXd& y, const SystemModel& model) {
  return measurement_update(state, y, model.obs_matrix, model.obs_noise_cov);
}

namespace {

Eigen::MatrixXd covariance_rate(const SystemModel& model, const Eigen::VectorXd& x, const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd f = model.drift_jacobian(x);
  const Eigen::MatrixXd g = model.diffusion(x);
  return f * p + p * f.transpose() + g * g.transpose();
}

}  // namespace

FilterState ekf_time_update(const FilterState& state, double delta_t, const SystemModel& model, double step) {
  if (delta_t < 0.0 || !(step > 0.0)) throw std::invalid_argument("ekf_time_update: bad step");
  Eigen::VectorXd x = state.estimate;
  Eigen::MatrixXd p = state.mse_bound.matrix();
  double remaining = delta_t;
  while (remaining > 1e-12 * step) {
    const double h = remaining < step * (1.0 + 1e-9) ? remaining : step;
    const Eigen::VectorXd kx1 = model.drift(x);
    const Eigen::MatrixXd kp1 = covariance_rate(model, x, p);
    const Eigen::VectorXd x2 = x + 0.5 * h * kx1;
    const Eigen::MatrixXd p2 = p + 0.5 * h * kp1;
    const Eigen::VectorXd kx2 = model.drift(x2);
    const Eigen::MatrixXd kp2 = covariance_rate(model, x2, p2);
    const Eigen::VectorXd x3 = x + 0.5 * h * kx2;
    const Eigen::MatrixXd p3 = p + 0.5 * h * kp2;
    const Eigen::VectorXd kx3 = model.drift(x3);
    const Eigen::MatrixXd kp3 = covariance_rate(model, x3, p3);
    const Eigen::VectorXd x4 = x + h * kx3;
    const Eigen::MatrixXd p4 = p + h * kp3;
    const Eigen::VectorXd kx4 = model.drift(x4);
    const Eigen::MatrixXd kp4 = covariance_rate(model, x4, p4);
    x += (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    p += (h / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    p = 0.5 * (p + p.transpose());
    remaining -= h;
  }
  return FilterState{x, SymMatrix(p), state.time + delta_t};
}

FilterState ekf_measurement_update(const FilterState& state, const Eigen::VectorXd& y, const SystemModel& model) {
  return measurement_update(state, y, model.obs_matrix, model.obs_noise_cov);
}

}  // namespace bekf
