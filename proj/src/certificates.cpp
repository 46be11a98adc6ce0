#include "bekf/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "bekf/random.hpp"

namespace bekf {

namespace {

struct Expansion {
  Polynomial clearing;
  std::vector<Polynomial> drift;  // clearing * [f_i(x~) - f_i(z)] * e_j, index i*N + j
  std::vector<Polynomial> noise;  // clearing * (g g')_ij(z)
};

Expansion expand(const SystemModel& model, const Eigen::VectorXd& x_tilde) {
  if (!model.is_polynomial()) throw std::invalid_argument("error_polynomial: model has no polynomial data");
  const int n = model.dim_state;
  if (x_tilde.size() != n) throw std::invalid_argument("error_polynomial: anchor dimension");
  const RationalDrift& rd = *model.rational;

  std::vector<Polynomial> z;
  std::vector<Polynomial> e;
  for (int i = 0; i < n; ++i) {
    e.push_back(Polynomial::variable(n, i));
    z.push_back(Polynomial::constant(n, x_tilde(i)) - e.back());
  }
  Expansion out;
  out.clearing = rd.denominator.compose(z).pow(rd.power);
  const double den_anchor = std::pow(rd.denominator.evaluate(x_tilde), rd.power);

  std::vector<Polynomial> r(n);
  for (int i = 0; i < n; ++i) {
    const double f_anchor = rd.numerator[i].evaluate(x_tilde) / den_anchor;
    r[i] = f_anchor * out.clearing - rd.numerator[i].compose(z);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.drift.push_back(r[i] * e[j]);

  const int m = model.dim_noise;
  const auto& g = *model.diffusion_poly;
  std::vector<Polynomial> gz;
  gz.reserve(g.size());
  for (const auto& entry : g) gz.push_back(entry.compose(z));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Polynomial gg(n);
      for (int k = 0; k < m; ++k) gg += gz[i * m + k] * gz[j * m + k];
      out.noise.push_back(out.clearing * gg);
    }
  }
  return out;
}

int upper_index(int n, int k, int l) {
  // Row-major position of (k, l), k <= l, in the upper triangle.
  return k * n - k * (k - 1) / 2 + (l - k);
}

}  // namespace

ErrorPolynomial error_polynomial(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p) {
  const Expansion ex = expand(model, x_tilde);
  const int n = model.dim_state;
  if (p.dim() != n) throw std::invalid_argument("error_polynomial: P dimension");
  ErrorPolynomial out;
  out.cleared = Polynomial(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.cleared += (2.0 * p(i, j)) * ex.drift[i * n + j];
      out.cleared += p(i, j) * ex.noise[i * n + j];
    }
  }
  out.clearing = ex.clearing;
  out.clearing_power = model.rational->power;
  return out;
}

Certificate certify_linear(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SymMatrix& p, int p_index) {
  if (a.rows() != p.dim() || a.cols() != p.dim() || b.rows() != p.dim())
    throw std::invalid_argument("certify_linear: dimension mismatch");
  Certificate c;
  c.p_index = p_index;
  const Eigen::MatrixXd pa = p.matrix() * a;
  c.q_matrix = SymMatrix(Eigen::MatrixXd(pa.transpose() + pa));
  c.q_scalar = (b.transpose() * p.matrix() * b).trace();
  c.anchor = Eigen::VectorXd::Zero(p.dim());
  return c;
}

SosCertifier::SosCertifier(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SosOptions& options)
    : dim_(model.dim_state), anchor_(x_tilde), options_(options) {
  const Expansion ex = expand(model, x_tilde);
  const int n = dim_;

  int cleared_degree = 0;
  for (const auto& p : ex.drift) cleared_degree = std::max(cleared_degree, p.degree());
  for (const auto& p : ex.noise) cleared_degree = std::max(cleared_degree, p.degree());
  quad_degree_ = std::max(ex.clearing.degree(), 0) + 2;
  const int degree = std::max(cleared_degree, quad_degree_);
  half_degree_ = options.half_degree > 0 ? options.half_degree : (degree + 1) / 2;
  if (2 * half_degree_ < quad_degree_)
    throw std::invalid_argument("SosCertifier: Gram basis degree too low for the quadratic bound term");

  monomials_ = monomials_up_to(n, std::max(degree, 2 * half_degree_));
  basis_ = monomials_up_to(n, half_degree_);

  for (const auto& p : ex.drift) drift_terms_.push_back(dense(p));
  for (const auto& p : ex.noise) noise_terms_.push_back(dense(p));
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      Monomial m(n, 0);
      m[k] += 1;
      m[l] += 1;
      Polynomial quad(n);
      quad.add_term(m, k == l ? 1.0 : 2.0);
      free_terms_.push_back(dense(ex.clearing * quad));
    }
  }
  free_terms_.push_back(dense(ex.clearing));

  std::map<Monomial, int> index;
  for (size_t a = 0; a < monomials_.size(); ++a) index.emplace(monomials_[a], static_cast<int>(a));
  const int k = gram_dim();
  std::vector<std::vector<std::pair<int, int>>> groups(monomials_.size());
  Monomial prod(n);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      for (int v = 0; v < n; ++v) prod[v] = basis_[i][v] + basis_[j][v];
      groups[index.at(prod)].emplace_back(i, j);
    }
  }
  auto unit = [k](int i, int j) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(k, k);
    e(i, j) = 1.0;
    e(j, i) = 1.0;
    return e;
  };
  particular_.assign(monomials_.size(), Eigen::MatrixXd::Zero(k, k));
  for (size_t a = 0; a < monomials_.size(); ++a) {
    const auto& grp = groups[a];
    if (grp.empty()) continue;
    double weight = 0.0;
    for (const auto& [i, j] : grp) weight += i == j ? 1.0 : 2.0;
    for (const auto& [i, j] : grp) particular_[a] += unit(i, j);
    particular_[a] /= weight;
    const double w0 = grp[0].first == grp[0].second ? 1.0 : 2.0;
    for (size_t r = 1; r < grp.size(); ++r) {
      const double wr = grp[r].first == grp[r].second ? 1.0 : 2.0;
      null_dirs_.push_back(unit(grp[r].first, grp[r].second) / wr - unit(grp[0].first, grp[0].second) / w0);
    }
  }
}

Eigen::VectorXd SosCertifier::dense(const Polynomial& p) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(monomials_.size()));
  for (const auto& [m, c] : p.terms()) {
    const auto it = std::find(monomials_.begin(), monomials_.end(), m);
    if (it == monomials_.end()) throw std::logic_error("SosCertifier: monomial outside the expansion range");
    out(it - monomials_.begin()) = c;
  }
  return out;
}

Certificate SosCertifier::certify(const SymMatrix& p, const SymMatrix& sigma_tilde, int p_index) const {
  const int n = dim_;
  if (p.dim() != n || sigma_tilde.dim() != n) throw std::invalid_argument("SosCertifier::certify: dimension");

  Eigen::VectorXd cleared = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(monomials_.size()));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cleared += (2.0 * p(i, j)) * drift_terms_[i * n + j];
      cleared += p(i, j) * noise_terms_[i * n + j];
    }
  }

  // A leading form of odd degree above the bound term takes both signs; nothing can dominate it.
  const double scale = cleared.cwiseAbs().maxCoeff();
  int effective_degree = -1;
  for (size_t a = 0; a < monomials_.size(); ++a)
    if (std::abs(cleared(a)) > 1e-12 * scale) effective_degree = std::max(effective_degree, total_degree(monomials_[a]));
  if (effective_degree > quad_degree_ && effective_degree % 2 == 1)
    throw CertificateInfeasible(p_index, SdpStatus::infeasible,
                                "certify_sos: odd-degree leading term in the error polynomial (P index " +
                                    std::to_string(p_index) + ")");
  if (effective_degree > 2 * half_degree_)
    throw CertificateInfeasible(p_index, SdpStatus::infeasible,
                                "certify_sos: error polynomial degree exceeds the SOS basis (P index " +
                                    std::to_string(p_index) + ")");

  const int k = gram_dim();
  const int n_quad = sym_dim(n);
  const int n_free = n_quad + 1;
  LmiProgram lmi;
  lmi.constant = Eigen::MatrixXd::Zero(k, k);
  for (size_t a = 0; a < monomials_.size(); ++a)
    if (cleared(a) != 0.0 && total_degree(monomials_[a]) <= 2 * half_degree_) lmi.constant -= cleared(a) * particular_[a];
  lmi.objective = Eigen::VectorXd::Zero(n_free + static_cast<Eigen::Index>(null_dirs_.size()));
  lmi.coefficients.reserve(lmi.objective.size());
  const double rho = options_.regularization * (1.0 + sigma_tilde.trace());
  for (int v = 0; v < n_free; ++v) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(k, k);
    for (size_t a = 0; a < monomials_.size(); ++a)
      if (free_terms_[v](a) != 0.0) f += free_terms_[v](a) * particular_[a];
    lmi.coefficients.push_back(std::move(f));
  }
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c)
      lmi.objective(upper_index(n, r, c)) = (sigma_tilde(r, c) + (r == c ? rho : 0.0)) * (r == c ? 1.0 : 2.0);
  lmi.objective(n_quad) = 1.0;
  for (const auto& d : null_dirs_) lmi.coefficients.push_back(d);

  const LmiSolution sol = solve_lmi(lmi, options_.sdp);
  if (sol.status != SdpStatus::optimal)
    throw CertificateInfeasible(p_index, sol.status,
                                std::string("certify_sos: SDP ") + to_string(sol.status) + " (P index " +
                                    std::to_string(p_index) + ")");

  Certificate cert;
  cert.p_index = p_index;
  cert.anchor = anchor_;
  Eigen::MatrixXd q(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) q(r, c) = q(c, r) = sol.y(upper_index(n, r, c));
  cert.q_matrix = SymMatrix(q);
  cert.q_scalar = sol.y(n_quad);
  return cert;
}

Certificate certify_sos(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& sigma_tilde,
                        const SymMatrix& p, const SosOptions& options, int p_index) {
  return SosCertifier(model, x_tilde, options).certify(p, sigma_tilde, p_index);
}

std::vector<Certificate> certify_frame(const SystemModel& model, const Eigen::VectorXd& x_tilde,
                                       const SymMatrix& sigma_tilde, const PFrame& frame, CertificateMethod method,
                                       const SosOptions& options) {
  if (method == CertificateMethod::automatic)
    method = model.linear ? CertificateMethod::linear : CertificateMethod::sos;
  std::vector<Certificate> out;
  out.reserve(frame.members.size());
  if (method == CertificateMethod::linear) {
    if (!model.linear) throw std::invalid_argument("certify_frame: linear certificates need a linear model");
    for (size_t i = 0; i < frame.members.size(); ++i) {
      out.push_back(certify_linear(model.linear->a, model.linear->b, frame.members[i], static_cast<int>(i)));
      out.back().anchor = x_tilde;
    }
    return out;
  }
  const SosCertifier certifier(model, x_tilde, options);
  for (size_t i = 0; i < frame.members.size(); ++i)
    out.push_back(certifier.certify(frame.members[i], sigma_tilde, static_cast<int>(i)));
  return out;
}

double certificate_slack(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p,
                         const Certificate& cert, const Eigen::VectorXd& e) {
  const Eigen::VectorXd z = x_tilde - e;
  const Eigen::VectorXd df = model.drift(x_tilde) - model.drift(z);
  const Eigen::MatrixXd g = model.diffusion(z);
  const Eigen::MatrixXd& pm = p.matrix();
  double value = 2.0 * df.dot(pm * e) + (g.transpose() * pm * g).trace() - e.dot(cert.q_matrix.matrix() * e) -
                 cert.q_scalar;
  if (model.rational && model.rational->power > 0)
    value *= std::pow(model.rational->denominator.evaluate(z), model.rational->power);
  return value;
}

namespace {

constexpr std::uint32_t kValidationStream = 0x76616c69u;

std::vector<Eigen::VectorXd> probe_points(int n, double radius) {
  std::vector<Eigen::VectorXd> out;
  out.push_back(Eigen::VectorXd::Zero(n));
  for (double r : {radius, 0.5 * radius, 0.1 * radius}) {
    for (int i = 0; i < n; ++i) {
      out.push_back(r * Eigen::VectorXd::Unit(n, i));
      out.push_back(-r * Eigen::VectorXd::Unit(n, i));
    }
    if (n < 16) {
      for (long mask = 0; mask < (1L << n); ++mask) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = (mask >> i) & 1 ? 1.0 : -1.0;
        out.push_back(v * (r / std::sqrt(static_cast<double>(n))));
      }
    }
  }
  return out;
}

Eigen::VectorXd ball_sample(int n, double radius, std::uint64_t seed, long k) {
  PhiloxStream rng(seed, static_cast<std::uint32_t>(k), kValidationStream ^ static_cast<std::uint32_t>(k >> 32));
  Eigen::VectorXd d = rng.normal_vector(n);
  const double norm = d.norm();
  if (norm == 0.0) return Eigen::VectorXd::Zero(n);
  return d * (radius * std::pow(rng.uniform(), 1.0 / n) / norm);
}

}  // namespace

double validate_certificate(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p,
                            const Certificate& cert, const ValidationOptions& options) {
  const int n = model.dim_state;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : probe_points(n, options.radius))
    worst = std::max(worst, certificate_slack(model, x_tilde, p, cert, e));
  const long count = options.n_samples;
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (long k = 0; k < count; ++k)
    worst = std::max(worst, certificate_slack(model, x_tilde, p, cert, ball_sample(n, options.radius, options.seed, k)));
  return worst;
}

double validate_certificate_serial(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p,
                                   const Certificate& cert, const ValidationOptions& options) {
  const int n = model.dim_state;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : probe_points(n, options.radius))
    worst = std::max(worst, certificate_slack(model, x_tilde, p, cert, e));
  for (long k = 0; k < options.n_samples; ++k)
    worst = std::max(worst, certificate_slack(model, x_tilde, p, cert, ball_sample(n, options.radius, options.seed, k)));
  return worst;
}

}  // namespace bekf
