#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bekf/polynomial.hpp"

namespace bekf {

/// f_i(x) = numerator[i](x) / denominator(x)^power, with denominator > 0.
struct RationalDrift {
  std::vector<Polynomial> numerator;
  Polynomial denominator;
  int power = 0;
  // d numerator[i] / d x_j, row-major N x N, and d denominator / d x_j.
  std::vector<Polynomial> numerator_grad;
  std::vector<Polynomial> denominator_grad;
};

RationalDrift make_rational_drift(std::vector<Polynomial> numerator, Polynomial denominator, int power);

struct LinearDynamics {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

/// dx = f(x) dt + g(x) dw,  y_k = H x(T_k) + v_k,  v_k ~ (0, R).
struct SystemModel {
  std::string name;
  int dim_state = 0;
  int dim_noise = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> diffusion;
  Eigen::MatrixXd obs_matrix;
  Eigen::MatrixXd obs_noise_cov;

  std::optional<RationalDrift> rational;
  /// Entries of g, row-major dim_state x dim_noise.
  std::optional<std::vector<Polynomial>> diffusion_poly;
  std::optional<LinearDynamics> linear;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;

  bool is_polynomial() const { return rational.has_value() && diffusion_poly.has_value(); }
  int dim_obs() const { return static_cast<int>(obs_matrix.rows()); }

  /// Analytic when a jacobian callable or rational data is present, central
  /// differences otherwise.
  Eigen::MatrixXd drift_jacobian(const Eigen::VectorXd& x) const;

  /// Throws std::invalid_argument on inconsistent dimensions.
  void check() const;
};

Eigen::MatrixXd finite_difference_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double rel_step = 1e-6);

SystemModel make_linear_model(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& h,
                              const Eigen::MatrixXd& r);

/// Callables are evaluated from the polynomial data.
SystemModel make_rational_model(RationalDrift drift, std::vector<Polynomial> diffusion, int dim_noise,
                                const Eigen::MatrixXd& h, const Eigen::MatrixXd& r);

}  // namespace bekf
