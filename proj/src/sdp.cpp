#include "bekf/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bekf {

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::unbounded: return "unbounded";
    case SdpStatus::stalled: return "stalled";
  }
  return "?";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard form:  min <C,X>  s.t. <A_i,X> = b_i, X >= 0
//                 max b'y    s.t. sum y_i A_i + S = C, S >= 0
// Mat is MatrixXd or a stack-bounded dynamic matrix for small problems.
struct Entry {
  int r;
  int c;
  double v;
};

template <class Mat>
struct StandardForm {
  Mat c;
  std::vector<Mat> a;
  VectorXd b;
  // Nonzeros of each a[i] (both triangles); used when cheaper than dense algebra.
  std::vector<std::vector<Entry>> nz;
  bool use_sparse = false;

  void index_sparsity() {
    nz.assign(a.size(), {});
    long total = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      for (int col = 0; col < a[i].cols(); ++col)
        for (int row = 0; row < a[i].rows(); ++row)
          if (a[i](row, col) != 0.0) nz[i].push_back({row, col, a[i](row, col)});
      total += static_cast<long>(nz[i].size());
    }
    const long k = c.rows();
    use_sparse = 2 * total < static_cast<long>(a.size()) * k * k;
  }
};

template <class Mat>
struct IpmResult {
  SdpStatus status = SdpStatus::stalled;
  Mat x;
  VectorXd y;
  Mat s;
  int iterations = 0;
  double accuracy = 0.0;
  std::optional<Mat> witness;
};

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 16, 16>;

template <class A, class B>
double dot(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.cwiseProduct(b).sum();
}

template <class Mat>
Mat sym(const Mat& m) {
  return 0.5 * (m + m.transpose());
}

template <class Mat>
VectorXd apply_a(const StandardForm<Mat>& sf, const Mat& x) {
  VectorXd out(sf.a.size());
  if (sf.use_sparse) {
    for (size_t i = 0; i < sf.a.size(); ++i) {
      double acc = 0.0;
      for (const Entry& e : sf.nz[i]) acc += e.v * x(e.r, e.c);
      out(i) = acc;
    }
    return out;
  }
  for (size_t i = 0; i < sf.a.size(); ++i) out(i) = dot(sf.a[i], x);
  return out;
}

template <class Mat>
Mat apply_at(const StandardForm<Mat>& sf, const VectorXd& y) {
  Mat out = Mat::Zero(sf.c.rows(), sf.c.cols());
  if (sf.use_sparse) {
    for (size_t i = 0; i < sf.a.size(); ++i)
      for (const Entry& e : sf.nz[i]) out(e.r, e.c) += y(i) * e.v;
    return out;
  }
  for (size_t i = 0; i < sf.a.size(); ++i) out += y(i) * sf.a[i];
  return out;
}

// Inverse Cholesky factor of a positive definite matrix; empty on failure.
template <class Mat>
std::optional<Mat> inverse_factor(const Mat& x) {
  Eigen::LLT<Mat> llt(x);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto k = x.rows();
  Mat inv = Mat::Identity(k, k);
  llt.matrixL().solveInPlace(inv);
  return inv;
}

// Lower bound on the smallest eigenvalue of a symmetric matrix, accurate to
// 1e-3 relative (Householder tridiagonalization, Sturm-sequence bisection).
// Step lengths only need this much.
template <class Mat>
double smallest_eigenvalue_bound(const Mat& w) {
  const auto k = w.rows();
  if (k == 1) return w(0, 0);
  Eigen::Tridiagonalization<Mat> tri(w);
  const auto d = tri.diagonal();
  const auto e = tri.subDiagonal();
  double lo = kInf;
  double hi = -kInf;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double r = (i > 0 ? std::abs(e(i - 1)) : 0.0) + (i + 1 < k ? std::abs(e(i)) : 0.0);
    lo = std::min(lo, d(i) - r);
    hi = std::max(hi, d(i) + r);
  }
  // Number of eigenvalues below x.
  auto count_below = [&](double x) {
    int count = 0;
    double q = d(0) - x;
    if (q < 0.0) ++count;
    for (Eigen::Index i = 1; i < k; ++i) {
      const double denom = q != 0.0 ? q : 1e-300;
      q = d(i) - x - e(i - 1) * e(i - 1) / denom;
      if (q < 0.0) ++count;
    }
    return count;
  };
  while (hi - lo > 1e-3 * std::max(std::abs(lo), 1e-12 * (std::abs(lo) + std::abs(hi)))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(mid) >= 1) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

// Largest alpha with x + alpha * dx >= 0, given the inverse factor of x.
template <class Mat>
double max_step(const Mat& inv_factor, const Mat& dx) {
  const Mat w = inv_factor * dx * inv_factor.transpose();
  const double lmin = smallest_eigenvalue_bound(sym(w));
  return lmin >= 0.0 ? kInf : -1.0 / lmin;
}

template <class Mat>
IpmResult<Mat> primal_dual_ipm(const StandardForm<Mat>& sf, const SdpOptions& opt) {
  const auto k = sf.c.rows();
  const auto m = static_cast<Eigen::Index>(sf.a.size());
  const double norm_c = sf.c.norm();
  const double norm_b = sf.b.norm();

  double max_a = 0.0;
  double ratio_b = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double na = sf.a[i].norm();
    max_a = std::max(max_a, na);
    ratio_b = std::max(ratio_b, (1.0 + std::abs(sf.b(i))) / (1.0 + na));
  }
  const double sk = std::sqrt(static_cast<double>(k));
  const double xi_x = std::max({10.0, sk, static_cast<double>(k) * ratio_b});
  const double xi_s = std::max({10.0, sk, (1.0 + std::max(max_a, norm_c)) / sk});

  IpmResult<Mat> r;
  Mat x = xi_x * Mat::Identity(k, k);
  Mat s = xi_s * Mat::Identity(k, k);
  VectorXd y = VectorXd::Zero(m);

  std::vector<Mat> g(m);
  MatrixXd schur(m, m);

  // Near the optimum roundoff can stop the residuals from reaching the strict
  // tolerances; the best iterate is kept and accepted at relaxed_tol.
  double tau = 0.9;
  double best_merit = kInf;
  int since_best = 0;
  // A dual-feasible iterate already satisfies the LMI; it is the fallback when
  // the residuals cannot be driven down further.
  double best_dual_merit = kInf;
  VectorXd best_dual_y;
  auto finish_stalled = [&]() -> IpmResult<Mat>& {
    if (best_merit <= opt.relaxed_tol) {
      r.status = SdpStatus::optimal;
      r.accuracy = best_merit;
    } else if (best_dual_merit <= opt.suboptimal_tol) {
      r.status = SdpStatus::optimal;
      r.accuracy = best_dual_merit;
      r.y = best_dual_y;
    } else {
      r.status = SdpStatus::stalled;
      r.x = x;
      r.y = y;
      r.s = s;
    }
    return r;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    r.iterations = it;
    const VectorXd rp = sf.b - apply_a(sf, x);
    const Mat aty = apply_at(sf, y);
    const Mat rd = sf.c - aty - s;
    const double pobj = dot(sf.c, x);
    const double dobj = sf.b.dot(y);
    const double mu = dot(x, s) / static_cast<double>(k);
    const double pinf = rp.norm() / (1.0 + norm_b);
    const double dinf = rd.norm() / (1.0 + norm_c);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (pinf < opt.feasibility_tol && dinf < opt.feasibility_tol && gap < opt.gap_tol) {
      r.status = SdpStatus::optimal;
      r.accuracy = std::max({pinf, dinf, gap});
      r.x = x;
      r.y = y;
      r.s = s;
      return r;
    }
    const double merit = std::max({pinf, dinf, gap});
    if (merit < 0.5 * best_merit) {
      since_best = 0;
    } else if (best_merit < 1e-4 && ++since_best >= 5) {
      return finish_stalled();
    }
    if (dinf < opt.feasibility_tol && std::max(pinf, gap) < best_dual_merit) {
      best_dual_merit = std::max(pinf, gap);
      best_dual_y = y;
    }
    if (merit < best_merit) {
      best_merit = merit;
      r.x = x;
      r.y = y;
      r.s = s;
    }
    // Diverging primal iterate with vanishing constraint image: the dual is infeasible.
    if (pobj < 0.0) {
      const double scale = -pobj;
      if (apply_a(sf, x).norm() <= 1e-8 * scale && x.norm() > 1e8 * xi_x) {
        r.status = SdpStatus::infeasible;
        r.witness = x / scale;
        return r;
      }
    }
    // Diverging dual iterate: the dual is unbounded.
    if (dobj > 0.0 && (aty + s).norm() <= 1e-8 * dobj && y.norm() > 1e8 * (1.0 + xi_s)) {
      r.status = SdpStatus::unbounded;
      return r;
    }

    const auto x_factor = inverse_factor(x);
    const auto s_factor = inverse_factor(s);
    if (!x_factor || !s_factor) return finish_stalled();
    const Mat s_inv = s_factor->transpose() * *s_factor;

    // M_ij = <A_i, X A_j S^-1>
    for (Eigen::Index j = 0; j < m; ++j) g[j].noalias() = (x * sf.a[j]).eval() * s_inv;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (sf.use_sparse) {
          double acc = 0.0;
          for (const Entry& e : sf.nz[i]) acc += e.v * g[j](e.r, e.c);
          schur(i, j) = acc;
        } else {
          schur(i, j) = dot(sf.a[i], g[j]);
        }
      }
    }
    Eigen::LDLT<MatrixXd> schur_fact(schur);
    if (schur_fact.info() != Eigen::Success) return finish_stalled();

    const Mat x_rd_sinv = (x * rd).eval() * s_inv;
    auto direction = [&](double sigma_mu, const Mat* corr, Mat& dx, VectorXd& dy, Mat& ds) {
      Mat t = sigma_mu * s_inv - x - x_rd_sinv;
      if (corr) t -= *corr;
      const VectorXd rhs = rp - apply_a(sf, t);
      dy = schur_fact.solve(rhs);
      const Mat at_dy = apply_at(sf, dy);
      ds = rd - at_dy;
      dx = sym(Mat(t + (x * at_dy).eval() * s_inv));
    };

    Mat dx_a, ds_a, dx, ds;
    VectorXd dy_a, dy;
    direction(0.0, nullptr, dx_a, dy_a, ds_a);
    const double ap_a = std::min(1.0, max_step(*x_factor, dx_a));
    const double ad_a = std::min(1.0, max_step(*s_factor, ds_a));
    const double mu_a = dot(x + ap_a * dx_a, s + ad_a * ds_a) / static_cast<double>(k);
    // Short predictor steps call for more centering.
    const double expon = std::max(1.0, 3.0 * std::pow(std::min(ap_a, ad_a), 2));
    const double sigma = mu > 0.0 ? std::pow(std::clamp(mu_a / mu, 0.0, 1.0), expon) : 0.0;

    const Mat corr = (dx_a * ds_a).eval() * s_inv;
    direction(sigma * mu, &corr, dx, dy, ds);

    const double ap = std::min(1.0, tau * max_step(*x_factor, dx));
    const double ad = std::min(1.0, tau * max_step(*s_factor, ds));
    tau = 0.9 + 0.09 * std::min(ap, ad);
    if (ap < 1e-12 && ad < 1e-12) return finish_stalled();
    x = sym(Mat(x + ap * dx));
    y += ad * dy;
    s = sym(Mat(s + ad * ds));
  }
  return finish_stalled();
}

MatrixXd lmi_value(const LmiProgram& lmi, const VectorXd& y) {
  MatrixXd f = lmi.constant;
  for (size_t i = 0; i < lmi.coefficients.size(); ++i) f += y(i) * lmi.coefficients[i];
  return sym(f);
}

template <class Mat>
IpmResult<MatrixXd> run_ipm(const LmiProgram& lmi, double margin, const SdpOptions& opt) {
  const auto k = lmi.constant.rows();
  StandardForm<Mat> sf;
  sf.c = sym(Mat(lmi.constant)) - margin * Mat::Identity(k, k);
  sf.b = -lmi.objective;
  sf.a.reserve(lmi.coefficients.size());
  for (const auto& f : lmi.coefficients) sf.a.push_back(-sym(Mat(f)));
  sf.index_sparsity();
  IpmResult<Mat> r = primal_dual_ipm(sf, opt);
  IpmResult<MatrixXd> out;
  out.status = r.status;
  out.x = r.x;
  out.y = r.y;
  out.s = r.s;
  out.iterations = r.iterations;
  out.accuracy = r.accuracy;
  if (r.witness) out.witness = MatrixXd(*r.witness);
  return out;
}

double min_eig(const MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

LmiSolution solve_lmi(const LmiProgram& lmi, const SdpOptions& opt) {
  const auto k = lmi.constant.rows();
  if (lmi.constant.cols() != k) throw std::invalid_argument("solve_lmi: constant term is not square");
  if (static_cast<size_t>(lmi.objective.size()) != lmi.coefficients.size())
    throw std::invalid_argument("solve_lmi: objective and coefficient counts differ");
  for (const auto& f : lmi.coefficients)
    if (f.rows() != k || f.cols() != k) throw std::invalid_argument("solve_lmi: coefficient shape");

  LmiSolution out;
  if (lmi.coefficients.empty()) {
    out.y.resize(0);
    out.slack = sym(lmi.constant);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.slack);
    if (k == 0 || es.eigenvalues()(0) >= 0.0) {
      out.status = SdpStatus::optimal;
    } else {
      out.status = SdpStatus::infeasible;
      const VectorXd v = es.eigenvectors().col(0);
      out.witness = MatrixXd(v * v.transpose());
    }
    return out;
  }

  const double scale = 1.0 + lmi.constant.cwiseAbs().maxCoeff();
  double margin = opt.psd_margin * scale;
  for (int attempt = 0; attempt <= opt.margin_retries; ++attempt, margin *= 100.0) {
    IpmResult<MatrixXd> r;
    // Fixed sizes cover the Gram bases of quadratic and quartic certificates in 1-3 variables.
    switch (k) {
      case 2: r = run_ipm<Eigen::Matrix2d>(lmi, margin, opt); break;
      case 3: r = run_ipm<Eigen::Matrix3d>(lmi, margin, opt); break;
      case 4: r = run_ipm<Eigen::Matrix4d>(lmi, margin, opt); break;
      case 6: r = run_ipm<Eigen::Matrix<double, 6, 6>>(lmi, margin, opt); break;
      case 10: r = run_ipm<Eigen::Matrix<double, 10, 10>>(lmi, margin, opt); break;
      default:
        r = k <= SmallMat::MaxRowsAtCompileTime ? run_ipm<SmallMat>(lmi, margin, opt)
                                                : run_ipm<MatrixXd>(lmi, margin, opt);
    }
    out.iterations += r.iterations;
    out.status = r.status;
    out.witness = r.witness;
    if (r.status != SdpStatus::optimal) {
      out.y = r.y;
      return out;
    }
    out.y = r.y;
    out.accuracy = r.accuracy;
    out.slack = lmi_value(lmi, out.y);
    out.value = lmi.objective.dot(out.y);
    if (min_eig(out.slack) >= 0.0) return out;
  }
  out.status = SdpStatus::stalled;
  return out;
}

SdpSolution solve_sdp(const SemidefiniteProgram& sdp, const SdpOptions& opt) {
  const int kdim = sdp.gram_dim;
  const int nfree = sdp.num_free;
  const int rows = static_cast<int>(sdp.eq_rhs.size());
  if (kdim <= 0) throw std::invalid_argument("solve_sdp: Gram dimension must be positive");
  if (static_cast<int>(sdp.eq_gram.size()) != rows) throw std::invalid_argument("solve_sdp: equality count mismatch");
  if (nfree > 0 && (sdp.eq_free.rows() != rows || sdp.eq_free.cols() != nfree))
    throw std::invalid_argument("solve_sdp: free-variable coefficient shape");
  if (sdp.objective_gram.rows() != kdim || sdp.objective_gram.cols() != kdim)
    throw std::invalid_argument("solve_sdp: objective Gram shape");
  if (sdp.objective_free.size() != nfree) throw std::invalid_argument("solve_sdp: objective free length");

  // Unknowns: upper-triangular Gram entries (row-major), then the free scalars.
  const int kx = kdim * (kdim + 1) / 2;
  const int nu = kx + nfree;
  std::vector<std::pair<int, int>> entry;
  entry.reserve(kx);
  for (int a = 0; a < kdim; ++a)
    for (int b = a; b < kdim; ++b) entry.emplace_back(a, b);
  auto to_matrix = [&](const VectorXd& xpart) {
    MatrixXd m(kdim, kdim);
    for (int e = 0; e < kx; ++e) {
      m(entry[e].first, entry[e].second) = xpart(e);
      m(entry[e].second, entry[e].first) = xpart(e);
    }
    return m;
  };

  MatrixXd eq(rows, nu);
  for (int r = 0; r < rows; ++r) {
    const MatrixXd a = sym(sdp.eq_gram[r]);
    for (int e = 0; e < kx; ++e) {
      const auto [i, j] = entry[e];
      eq(r, e) = i == j ? a(i, i) : 2.0 * a(i, j);
    }
    if (nfree > 0) eq.row(r).tail(nfree) = sdp.eq_free.row(r);
  }

  SdpSolution out;
  VectorXd u0 = VectorXd::Zero(nu);
  MatrixXd null_basis;
  if (rows == 0) {
    null_basis = MatrixXd::Identity(nu, nu);
  } else {
    Eigen::JacobiSVD<MatrixXd> svd(eq, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double thresh = 1e-12 * std::max(rows, nu) * (sv.size() ? sv(0) : 0.0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > thresh) ++rank;
    const VectorXd ub = svd.matrixU().leftCols(rank).transpose() * sdp.eq_rhs;
    u0 = svd.matrixV().leftCols(rank) * ub.cwiseQuotient(sv.head(rank));
    null_basis = svd.matrixV().rightCols(nu - rank);
    const double resid = (eq * u0 - sdp.eq_rhs).cwiseAbs().maxCoeff();
    if (resid > 1e-9 * (1.0 + sdp.eq_rhs.cwiseAbs().maxCoeff())) {
      out.status = SdpStatus::infeasible;
      out.equality_residual = resid;
      return out;
    }
  }

  const MatrixXd obj_gram = sym(sdp.objective_gram);
  auto objective_of = [&](const VectorXd& u) {
    double v = dot(obj_gram, to_matrix(u.head(kx)));
    if (nfree > 0) v += sdp.objective_free.dot(u.tail(nfree));
    return v;
  };

  // Directions that leave X unchanged only shift the objective: unbounded unless flat.
  MatrixXd reduced;
  if (null_basis.cols() > 0) {
    const MatrixXd nx = null_basis.topRows(kx);
    Eigen::JacobiSVD<MatrixXd> svd(nx, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double thresh = 1e-12 * std::max<Eigen::Index>(nx.rows(), nx.cols()) * (sv.size() ? sv(0) : 0.0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > thresh) ++rank;
    for (Eigen::Index c = rank; c < null_basis.cols(); ++c) {
      const VectorXd dir = null_basis * svd.matrixV().col(c);
      if (std::abs(objective_of(dir)) > 1e-9 * (1.0 + obj_gram.norm() + sdp.objective_free.norm())) {
        out.status = SdpStatus::unbounded;
        return out;
      }
    }
    reduced = null_basis * svd.matrixV().leftCols(rank);
  } else {
    reduced.resize(nu, 0);
  }

  LmiProgram lmi;
  lmi.constant = to_matrix(u0.head(kx));
  lmi.objective.resize(reduced.cols());
  const double base = objective_of(u0);
  for (Eigen::Index i = 0; i < reduced.cols(); ++i) {
    lmi.coefficients.push_back(to_matrix(reduced.col(i).head(kx)));
    lmi.objective(i) = objective_of(reduced.col(i));
  }
  LmiSolution ls = solve_lmi(lmi, opt);
  out.status = ls.status;
  out.iterations = ls.iterations;
  out.witness = ls.witness;
  if (ls.status != SdpStatus::optimal) return out;

  const VectorXd u = u0 + reduced * ls.y;
  out.gram = ls.slack;
  out.free = nfree > 0 ? VectorXd(u.tail(nfree)) : VectorXd();
  out.value = base + ls.value;
  out.equality_residual = rows ? (eq * u - sdp.eq_rhs).cwiseAbs().maxCoeff() : 0.0;
  return out;
}

}  // namespace bekf
