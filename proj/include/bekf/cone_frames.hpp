#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bekf/sym_matrix.hpp"

namespace bekf {

/// n+1 unit-norm symmetric matrices (n = N(N+1)/2) with pairwise trace
/// inner product -1/n. They sum to zero and positively span the symmetric
/// space: every nonzero Z has Tr{P_i Z} > 0 for some i.
struct PFrame {
  int dim_state = 0;
  int dim_sym = 0;
  std::vector<SymMatrix> members;
};

/// Generators U_i of a polyhedral inner approximation of the PSD cone, the
/// generators T_i of its dual cone, and their Gram matrix L_ij = Tr{T_i T_j}.
struct DualFrame {
  std::vector<SymMatrix> u_gens;
  std::vector<SymMatrix> t_gens;
  Eigen::MatrixXd gram_l;
};

/// Everything the bound computation needs that is independent of the filter state.
struct Frames {
  PFrame p;
  DualFrame dual;
};

class DegenerateFrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P_1 = I / sqrt(N); P_{k+1} = alpha_k sum_{i<=k} P_i + beta_k S_k with S_k
/// obtained by Gram-Schmidt over the canonical symmetric basis; P_{n+1} = -sum P_i.
PFrame build_p_frame(int dim);

/// {e_i e_i'} then {(e_i+e_j)(e_i+e_j)'} then {(e_i-e_j)(e_i-e_j)'}, i < j.
std::vector<SymMatrix> default_u_generators(int dim);

/// Minimal generator set of the dual of cone(u_gens). Throws
/// DegenerateFrameError when no candidate survives.
std::vector<SymMatrix> dual_generators(std::span<const SymMatrix> u_gens);

Eigen::MatrixXd gram_matrix(std::span<const SymMatrix> t_gens);

DualFrame build_dual_frame(std::vector<SymMatrix> u_gens);
Frames build_frames(int dim);

/// lambda >= 0 with M = sum lambda_i T_i, or nullopt when M lies outside cone(T).
std::optional<Eigen::VectorXd> decompose_in_dual_cone(const SymMatrix& m, const DualFrame& frame,
                                                      double tol = 1e-9);

/// Columns are svec(members).
Eigen::MatrixXd svec_columns(std::span<const SymMatrix> members);

}  // namespace bekf
