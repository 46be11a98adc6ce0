#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "bekf/random.hpp"
#include "bekf/sym_matrix.hpp"

namespace testutil {

inline Eigen::MatrixXd gaussian(bekf::PhiloxStream& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline bekf::SymMatrix random_sym(bekf::PhiloxStream& rng, int n) {
  const Eigen::MatrixXd m = gaussian(rng, n, n);
  return bekf::SymMatrix(0.5 * (m + m.transpose()));
}

inline bekf::SymMatrix random_psd(bekf::PhiloxStream& rng, int n) {
  const Eigen::MatrixXd m = gaussian(rng, n, n);
  return bekf::SymMatrix(m * m.transpose());
}

// Eigenvalues shifted into [-1.2 - u, -0.2 - u].
inline Eigen::MatrixXd random_stable(bekf::PhiloxStream& rng, int n) {
  const Eigen::MatrixXd a = gaussian(rng, n, n);
  const double shift = Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues().real().maxCoeff();
  return a - (std::max(shift, 0.0) + 0.2 + rng.uniform()) * Eigen::MatrixXd::Identity(n, n);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double min_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

}  // namespace testutil
