#include "bekf/polynomial.hpp"

#include <numeric>
#include <stdexcept>

namespace bekf {

int total_degree(const Monomial& m) { return std::accumulate(m.begin(), m.end(), 0); }

std::vector<Monomial> monomials_up_to(int num_vars, int max_degree) {
  std::vector<Monomial> out;
  for (int d = 0; d <= max_degree; ++d) {
    // Compositions of d into num_vars parts, first variable's exponent descending.
    Monomial m(num_vars, 0);
    auto rec = [&](auto&& self, int var, int left) -> void {
      if (var == num_vars - 1) {
        m[var] = left;
        out.push_back(m);
        return;
      }
      for (int e = left; e >= 0; --e) {
        m[var] = e;
        self(self, var + 1, left - e);
      }
    };
    if (num_vars == 0) {
      if (d == 0) out.push_back({});
      continue;
    }
    rec(rec, 0, d);
  }
  return out;
}

Polynomial Polynomial::constant(int num_vars, double c) {
  Polynomial p(num_vars);
  p.add_term(Monomial(num_vars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int num_vars, int index) {
  if (index < 0 || index >= num_vars) throw std::out_of_range("Polynomial::variable");
  Polynomial p(num_vars);
  Monomial m(num_vars, 0);
  m[index] = 1;
  p.add_term(m, 1.0);
  return p;
}

Polynomial Polynomial::affine(const Eigen::VectorXd& coeffs, double offset) {
  const int n = static_cast<int>(coeffs.size());
  Polynomial p = constant(n, offset);
  for (int j = 0; j < n; ++j) p += coeffs(j) * variable(n, j);
  return p;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) d = std::max(d, total_degree(m));
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  const auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (static_cast<int>(m.size()) != num_vars_) throw std::invalid_argument("Polynomial: monomial arity");
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != num_vars_) throw std::invalid_argument("Polynomial::evaluate: arity");
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (int i = 0; i < num_vars_; ++i)
      for (int e = 0; e < m[i]; ++e) t *= x[i];
    sum += t;
  }
  return sum;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial out(num_vars_);
  for (const auto& [m, c] : terms_) {
    if (m[var] == 0) continue;
    Monomial d = m;
    d[var] -= 1;
    out.add_term(d, c * m[var]);
  }
  return out;
}

Polynomial Polynomial::homogeneous_part(int degree) const {
  Polynomial out(num_vars_);
  for (const auto& [m, c] : terms_)
    if (total_degree(m) == degree) out.add_term(m, c);
  return out;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 0) throw std::invalid_argument("Polynomial::pow: negative exponent");
  Polynomial out = constant(num_vars_, 1.0);
  for (int i = 0; i < k; ++i) out = out * *this;
  return out;
}

Polynomial Polynomial::compose(std::span<const Polynomial> subs) const {
  if (static_cast<int>(subs.size()) != num_vars_) throw std::invalid_argument("Polynomial::compose: arity");
  if (subs.empty()) return *this;
  const int out_vars = subs.front().num_vars();
  std::vector<int> max_exp(num_vars_, 0);
  for (const auto& [m, c] : terms_)
    for (int i = 0; i < num_vars_; ++i) max_exp[i] = std::max(max_exp[i], m[i]);
  std::vector<std::vector<Polynomial>> powers(num_vars_);
  for (int i = 0; i < num_vars_; ++i) {
    powers[i].push_back(constant(out_vars, 1.0));
    for (int e = 1; e <= max_exp[i]; ++e) powers[i].push_back(powers[i].back() * subs[i]);
  }
  Polynomial out(out_vars);
  for (const auto& [m, c] : terms_) {
    Polynomial t = constant(out_vars, c);
    for (int i = 0; i < num_vars_; ++i)
      if (m[i] > 0) t = t * powers[i][m[i]];
    out += t;
  }
  return out;
}

void Polynomial::check_vars(const Polynomial& o) const {
  if (o.num_vars_ != num_vars_) throw std::invalid_argument("Polynomial: variable count mismatch");
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  check_vars(o);
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  check_vars(o);
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.check_vars(b);
  Polynomial out(a.num_vars_);
  Monomial m(a.num_vars_);
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      for (int i = 0; i < a.num_vars_; ++i) m[i] = ma[i] + mb[i];
      out.add_term(m, ca * cb);
    }
  }
  return out;
}

}  // namespace bekf
