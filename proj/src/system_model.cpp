#include "bekf/system_model.hpp"

#include <cmath>
#include <stdexcept>

namespace bekf {

namespace {

Eigen::VectorXd eval_rational(const RationalDrift& r, const Eigen::VectorXd& x) {
  const double den = std::pow(r.denominator.evaluate(x), r.power);
  Eigen::VectorXd out(r.numerator.size());
  for (size_t i = 0; i < r.numerator.size(); ++i) out(i) = r.numerator[i].evaluate(x) / den;
  return out;
}

Eigen::MatrixXd rational_jacobian(const RationalDrift& r, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(r.numerator.size());
  Eigen::MatrixXd jac(n, n);
  const double m = r.denominator.evaluate(x);
  const double mp = std::pow(m, r.power);
  for (int i = 0; i < n; ++i) {
    const double num = r.numerator[i].evaluate(x);
    for (int j = 0; j < n; ++j) {
      const double dnum = r.numerator_grad[i * n + j].evaluate(x);
      const double dm = r.power == 0 ? 0.0 : r.denominator_grad[j].evaluate(x);
      jac(i, j) = dnum / mp - r.power * num * dm / (mp * m);
    }
  }
  return jac;
}

}  // namespace

RationalDrift make_rational_drift(std::vector<Polynomial> numerator, Polynomial denominator, int power) {
  if (numerator.empty()) throw std::invalid_argument("make_rational_drift: empty numerator");
  if (power < 0) throw std::invalid_argument("make_rational_drift: negative power");
  const int n = static_cast<int>(numerator.size());
  for (const auto& p : numerator)
    if (p.num_vars() != n) throw std::invalid_argument("make_rational_drift: numerator arity");
  if (denominator.num_vars() != n) throw std::invalid_argument("make_rational_drift: denominator arity");
  RationalDrift r;
  r.numerator = std::move(numerator);
  r.denominator = std::move(denominator);
  r.power = power;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r.numerator_grad.push_back(r.numerator[i].derivative(j));
  for (int j = 0; j < n; ++j) r.denominator_grad.push_back(r.denominator.derivative(j));
  return r;
}

Eigen::MatrixXd finite_difference_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double rel_step) {
  const auto n = x.size();
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Eigen::VectorXd col = (f(xp) - f(xm)) / (2.0 * h);
    if (j == 0) jac.resize(col.size(), n);
    jac.col(j) = col;
  }
  return jac;
}

Eigen::MatrixXd SystemModel::drift_jacobian(const Eigen::VectorXd& x) const {
  if (jacobian) return jacobian(x);
  if (linear) return linear->a;
  if (rational) return rational_jacobian(*rational, x);
  return finite_difference_jacobian(drift, x);
}

void SystemModel::check() const {
  if (dim_state < 1) throw std::invalid_argument("SystemModel: dim_state must be positive");
  if (dim_noise < 0) throw std::invalid_argument("SystemModel: negative dim_noise");
  if (!drift || !diffusion) throw std::invalid_argument("SystemModel: drift and diffusion required");
  if (obs_matrix.cols() != dim_state) throw std::invalid_argument("SystemModel: H has wrong column count");
  if (obs_noise_cov.rows() != obs_matrix.rows() || obs_noise_cov.cols() != obs_matrix.rows())
    throw std::invalid_argument("SystemModel: R must be p x p");
  if (rational && static_cast<int>(rational->numerator.size()) != dim_state)
    throw std::invalid_argument("SystemModel: rational drift dimension");
  if (diffusion_poly && static_cast<int>(diffusion_poly->size()) != dim_state * dim_noise)
    throw std::invalid_argument("SystemModel: diffusion polynomial count");
}

SystemModel make_linear_model(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& h,
                              const Eigen::MatrixXd& r) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("make_linear_model: dimension mismatch");
  SystemModel m;
  m.name = "linear";
  m.dim_state = n;
  m.dim_noise = static_cast<int>(b.cols());
  m.drift = [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
  m.diffusion = [b](const Eigen::VectorXd&) -> Eigen::MatrixXd { return b; };
  m.obs_matrix = h;
  m.obs_noise_cov = r;
  m.linear = LinearDynamics{a, b};

  std::vector<Polynomial> num;
  for (int i = 0; i < n; ++i) num.push_back(Polynomial::affine(a.row(i).transpose()));
  m.rational = make_rational_drift(std::move(num), Polynomial::constant(n, 1.0), 0);
  std::vector<Polynomial> diff;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m.dim_noise; ++j) diff.push_back(Polynomial::constant(n, b(i, j)));
  m.diffusion_poly = std::move(diff);
  m.check();
  return m;
}

SystemModel make_rational_model(RationalDrift drift, std::vector<Polynomial> diffusion, int dim_noise,
                                const Eigen::MatrixXd& h, const Eigen::MatrixXd& r) {
  SystemModel m;
  m.name = "rational";
  m.dim_state = static_cast<int>(drift.numerator.size());
  m.dim_noise = dim_noise;
  m.rational = std::move(drift);
  m.diffusion_poly = std::move(diffusion);
  m.drift = [rd = *m.rational](const Eigen::VectorXd& x) -> Eigen::VectorXd { return eval_rational(rd, x); };
  m.diffusion = [g = *m.diffusion_poly, n = m.dim_state, dim_noise](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd out(n, dim_noise);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim_noise; ++j) out(i, j) = g[i * dim_noise + j].evaluate(x);
    return out;
  };
  m.obs_matrix = h;
  m.obs_noise_cov = r;
  m.check();
  return m;
}

}  // namespace bekf
