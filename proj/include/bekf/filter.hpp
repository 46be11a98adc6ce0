#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "bekf/bound_dynamics.hpp"
#include "bekf/sym_matrix.hpp"
#include "bekf/system_model.hpp"

namespace bekf {

/// estimate / mse_bound hold (x~, Sigma~) between observations and
/// (x^, Sigma^) right after an update. For the EKF the bound is its P.
struct FilterState {
  Eigen::VectorXd estimate;
  SymMatrix mse_bound;
  double time = 0.0;
};

struct GainResult {
  Eigen::MatrixXd gain;
  Eigen::VectorXd innovation;
};

class SingularInnovation : public std::runtime_error {
 public:
  SingularInnovation(double condition, const std::string& what) : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// K = Sigma H' (H Sigma H' + R)^-1. Throws SingularInnovation when the
/// innovation covariance is not positive definite or its condition number,
/// taken against the size of |H|^2 |Sigma| + |R|, exceeds max_condition.
GainResult kalman_gain(const SymMatrix& prior, const Eigen::VectorXd& estimate, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& h, const Eigen::MatrixXd& r, double max_condition = 1e12);

/// (I - KH) Sigma (I - KH)' + K R K'.
SymMatrix joseph_update(const SymMatrix& prior, const Eigen::MatrixXd& gain, const Eigen::MatrixXd& h,
                        const Eigen::MatrixXd& r);

FilterState measurement_update(const FilterState& state, const Eigen::VectorXd& y, const Eigen::MatrixXd& h,
                               const Eigen::MatrixXd& r);

FilterState bekf_time_update(const FilterState& state, double delta_t, BoundPropagator& propagator);
FilterState bekf_measurement_update(const FilterState& state, const Eigen::VectorXd& y, const SystemModel& model);

/// x' = f(x), P' = F P + P F' + g g' with F the drift Jacobian, both by RK4.
FilterState ekf_time_update(const FilterState& state, double delta_t, const SystemModel& model, double step = 0.01);
FilterState ekf_measurement_update(const FilterState& state, const Eigen::VectorXd& y, const SystemModel& model);

}  // namespace bekf
