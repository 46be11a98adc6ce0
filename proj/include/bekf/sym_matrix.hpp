#pragma once

#include <Eigen/Dense>

namespace bekf {

/// Dense symmetric N x N matrix. Construction symmetrizes its input, so
/// entry (i, j) and entry (j, i) are always bit-identical.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix zero(int dim) { return SymMatrix(dim); }
  static SymMatrix identity(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double min_eigenvalue() const;
  Eigen::VectorXd eigenvalues() const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXd m_;
};

/// Dimension of the space of symmetric N x N matrices, N(N+1)/2.
constexpr int sym_dim(int n) { return n * (n + 1) / 2; }

/// Trace inner product Tr{XY}.
double inner(const SymMatrix& x, const SymMatrix& y);

/// Coordinates in the orthonormal basis {E_ii, (E_ij + E_ji)/sqrt(2)} taken
/// over the upper triangle in row-major order, so inner(X, Y) == svec(X).dot(svec(Y)).
Eigen::VectorXd svec(const SymMatrix& x);
SymMatrix smat(const Eigen::VectorXd& v, int dim);

/// Element k of the canonical orthonormal basis used by svec.
SymMatrix canonical_basis(int dim, int k);

/// Re-symmetrize and clamp eigenvalues below `floor` up to `floor`.
SymMatrix floor_eigenvalues(const SymMatrix& x, double floor = 0.0);

}  // namespace bekf
