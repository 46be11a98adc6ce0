#pragma once

#include <Eigen/Dense>

namespace bekf {

enum class Sense { minimize, maximize };
enum class LpStatus { optimal, unbounded, infeasible };

const char* to_string(LpStatus s);

/// optimize objective^T x  subject to  constraint_matrix * x <= constraint_rhs,
/// lower <= x <= upper. Empty bound vectors mean the variables are free.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd constraint_matrix;
  Eigen::VectorXd constraint_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Sense sense = Sense::minimize;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(constraint_rhs.size()); }
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double pivot_tol = 1e-11;
  double optimality_tol = 1e-12;
  int max_iterations = 50000;
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule. Intended for
/// the handful of variables that show up in the bound subproblems.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

/// Is `target` a nonnegative combination of the columns of `generators`?
/// Returns the coefficient vector when it is.
bool nonnegative_combination(const Eigen::MatrixXd& generators, const Eigen::VectorXd& target,
                             Eigen::VectorXd* coefficients = nullptr, double tol = 1e-9);

}  // namespace bekf
