#include "bekf/sym_matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace bekf {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix: matrix is not square");
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out(i, i) = m(i, i);
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

}  // namespace

SymMatrix::SymMatrix(int dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (dim < 0) throw std::invalid_argument("SymMatrix: negative dimension");
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) : m_(symmetrized(m)) {}

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix out(dim);
  out.m_.setIdentity();
  return out;
}

double SymMatrix::min_eigenvalue() const {
  if (m_.rows() == 0) return 0.0;
  return eigenvalues()(0);
}

Eigen::VectorXd SymMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  m_ -= o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

double inner(const SymMatrix& x, const SymMatrix& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("inner: dimension mismatch");
  return x.matrix().cwiseProduct(y.matrix()).sum();
}

Eigen::VectorXd svec(const SymMatrix& x) {
  const int n = x.dim();
  Eigen::VectorXd v(sym_dim(n));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    v(k++) = x(i, i);
    for (int j = i + 1; j < n; ++j) v(k++) = M_SQRT2 * x(i, j);
  }
  return v;
}

SymMatrix smat(const Eigen::VectorXd& v, int dim) {
  if (v.size() != sym_dim(dim)) throw std::invalid_argument("smat: length mismatch");
  Eigen::MatrixXd m(dim, dim);
  int k = 0;
  for (int i = 0; i < dim; ++i) {
    m(i, i) = v(k++);
    for (int j = i + 1; j < dim; ++j) {
      const double e = v(k++) / M_SQRT2;
      m(i, j) = e;
      m(j, i) = e;
    }
  }
  return SymMatrix(m);
}

SymMatrix canonical_basis(int dim, int k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(sym_dim(dim));
  v(k) = 1.0;
  return smat(v, dim);
}

SymMatrix floor_eigenvalues(const SymMatrix& x, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.matrix());
  const Eigen::VectorXd& lam = es.eigenvalues();
  if (lam.size() == 0 || lam(0) >= floor) return x;
  const Eigen::VectorXd clamped = lam.cwiseMax(floor);
  const Eigen::MatrixXd& v = es.eigenvectors();
  return SymMatrix(v * clamped.asDiagonal() * v.transpose());
}

}  // namespace bekf
