#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace bekf {

enum class SdpStatus { optimal, infeasible, unbounded, stalled };

const char* to_string(SdpStatus s);

struct SdpOptions {
  double gap_tol = 1e-9;
  double feasibility_tol = 1e-9;
  /// Accepted when progress stalls before the strict tolerances are met.
  double relaxed_tol = 1e-7;
  /// Failing that, the best dual-feasible iterate (which satisfies the LMI) is
  /// returned when its gap and primal residual are below this.
  double suboptimal_tol = 1e-4;
  int max_iterations = 80;
  /// The returned LMI value satisfies F(y) >= margin * scale * I, where scale
  /// is 1 + max |F0|. Absorbs the residual left by the interior-point method.
  double psd_margin = 1e-10;
  /// Retries with the margin grown 100x when the final F(y) is not PSD.
  int margin_retries = 3;
};

/// minimize objective^T y  subject to  constant + sum_i y_i coefficients[i] >= 0.
struct LmiProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> coefficients;
};

struct LmiSolution {
  SdpStatus status = SdpStatus::stalled;
  Eigen::VectorXd y;
  Eigen::MatrixXd slack;  // F(y)
  double value = 0.0;
  int iterations = 0;
  /// Largest relative residual or gap at the returned point.
  double accuracy = 0.0;
  /// For `infeasible`: Z >= 0 with Tr{F_i Z} = 0 and Tr{F_0 Z} < 0.
  std::optional<Eigen::MatrixXd> witness;
};

LmiSolution solve_lmi(const LmiProgram& lmi, const SdpOptions& options = {});

/// One PSD Gram matrix X (gram_dim x gram_dim) plus free scalars v.
///   minimize   <objective_gram, X> + objective_free^T v
///   subject to <eq_gram[r], X> + eq_free.row(r) v = eq_rhs(r),  X >= 0.
struct SemidefiniteProgram {
  int gram_dim = 0;
  int num_free = 0;
  std::vector<Eigen::MatrixXd> eq_gram;
  Eigen::MatrixXd eq_free;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd objective_gram;
  Eigen::VectorXd objective_free;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::stalled;
  Eigen::MatrixXd gram;
  Eigen::VectorXd free;
  double value = 0.0;
  double equality_residual = 0.0;
  int iterations = 0;
  std::optional<Eigen::MatrixXd> witness;
};

/// Eliminates the equality constraints by an affine parametrization of their
/// solution set and hands the resulting LMI to solve_lmi.
SdpSolution solve_sdp(const SemidefiniteProgram& sdp, const SdpOptions& options = {});

}  // namespace bekf
