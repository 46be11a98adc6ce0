#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace bekf {

/// Exponent vector of a monomial.
using Monomial = std::vector<int>;

int total_degree(const Monomial& m);

/// All monomials in `num_vars` variables with total degree <= max_degree,
/// graded, lexicographic within a degree (x1 before x2).
std::vector<Monomial> monomials_up_to(int num_vars, int max_degree);

/// Sparse real multivariate polynomial. Terms are kept in a std::map so
/// iteration order, and hence every derived floating-point result, is
/// deterministic.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int num_vars) : num_vars_(num_vars) {}

  static Polynomial constant(int num_vars, double c);
  static Polynomial variable(int num_vars, int index);
  /// Sum_j coeffs(j) x_j + offset.
  static Polynomial affine(const Eigen::VectorXd& coeffs, double offset = 0.0);

  int num_vars() const { return num_vars_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<Monomial, double>& terms() const { return terms_; }

  double coefficient(const Monomial& m) const;
  void add_term(const Monomial& m, double c);

  double evaluate(std::span<const double> x) const;
  double evaluate(const Eigen::VectorXd& x) const { return evaluate(std::span<const double>(x.data(), x.size())); }

  Polynomial derivative(int var) const;
  /// Homogeneous part of exactly the given degree.
  Polynomial homogeneous_part(int degree) const;
  /// p(s_1(y), ..., s_n(y)) for polynomials s_i in a common set of variables y.
  Polynomial compose(std::span<const Polynomial> subs) const;
  Polynomial pow(int k) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  void check_vars(const Polynomial& o) const;

  int num_vars_ = 0;
  std::map<Monomial, double> terms_;
};

}  // namespace bekf
