#include "bekf/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bekf {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::infeasible: return "infeasible";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// How an original variable maps onto the nonnegative tableau columns.
struct ColumnMap {
  int pos = -1;  // x = col[pos] - col[neg]
  int neg = -1;
};

class Tableau {
 public:
  Tableau(int rows, int cols) : t_(Eigen::MatrixXd::Zero(rows, cols + 1)), z_(Eigen::VectorXd::Zero(cols + 1)), basis_(rows, -1), cols_(cols) {}

  Eigen::MatrixXd& t() { return t_; }
  Eigen::VectorXd& z() { return z_; }
  std::vector<int>& basis() { return basis_; }
  int rows() const { return static_cast<int>(t_.rows()); }
  int cols() const { return cols_; }
  double rhs(int r) const { return t_(r, cols_); }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    t_(r, c) = 1.0;
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) {
        t_.row(i) -= f * t_.row(r);
        t_(i, c) = 0.0;
      }
    }
    const double f = z_(c);
    if (f != 0.0) {
      z_ -= f * t_.row(r).transpose();
      z_(c) = 0.0;
    }
    basis_[r] = c;
  }

  // Reset the objective row for costs c over the columns (basis-adjusted).
  void set_costs(const Eigen::VectorXd& c) {
    z_.setZero();
    z_.head(cols_) = c;
    for (int i = 0; i < rows(); ++i) {
      const double cb = c(basis_[i]);
      if (cb != 0.0) z_ -= cb * t_.row(i).transpose();
    }
  }

  double objective_value() const { return -z_(cols_); }

  // Bland's rule. Returns false when the phase is unbounded.
  bool run(const std::vector<bool>& allowed, const LpOptions& opt, double rc_tol, int& iterations) {
    while (iterations < opt.max_iterations) {
      int enter = -1;
      for (int j = 0; j < cols_; ++j) {
        if (allowed[j] && z_(j) < -rc_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= opt.pivot_tol) continue;
        const double ratio = t_(i, cols_) / a;
        const double slack = 1e-12 * (1.0 + std::abs(best));
        if (leave < 0 || ratio < best - slack ||
            (std::abs(ratio - best) <= slack && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
      ++iterations;
    }
    throw std::runtime_error("solve_lp: iteration limit reached");
  }

 private:
  Eigen::MatrixXd t_;
  Eigen::VectorXd z_;
  std::vector<int> basis_;
  int cols_;
};

void check_shapes(const LinearProgram& lp) {
  const auto n = lp.objective.size();
  if (lp.constraint_matrix.rows() != lp.constraint_rhs.size())
    throw std::invalid_argument("solve_lp: constraint rows and rhs length differ");
  if (lp.constraint_rhs.size() > 0 && lp.constraint_matrix.cols() != n)
    throw std::invalid_argument("solve_lp: constraint columns and objective length differ");
  if (lp.lower.size() != 0 && lp.lower.size() != n) throw std::invalid_argument("solve_lp: lower bound length");
  if (lp.upper.size() != 0 && lp.upper.size() != n) throw std::invalid_argument("solve_lp: upper bound length");
  if (n == 0) throw std::invalid_argument("solve_lp: no variables");
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt) {
  check_shapes(lp);
  const int n = lp.num_vars();
  const int m0 = lp.num_rows();

  // Map variables onto nonnegative columns; bounds other than x >= 0 become rows.
  std::vector<ColumnMap> cmap(n);
  std::vector<std::pair<int, double>> bound_rows;  // (signed var index + 1, rhs): +j => x_j <= rhs, -j => -x_j <= rhs
  int ncols = 0;
  for (int j = 0; j < n; ++j) {
    const double lo = lp.lower.size() ? lp.lower(j) : -kInf;
    const double hi = lp.upper.size() ? lp.upper(j) : kInf;
    if (lo > hi) {
      LpSolution s;
      s.status = LpStatus::infeasible;
      return s;
    }
    if (lo == 0.0) {
      cmap[j].pos = ncols++;
    } else {
      cmap[j].pos = ncols++;
      cmap[j].neg = ncols++;
      if (std::isfinite(lo)) bound_rows.emplace_back(-(j + 1), -lo);
    }
    if (std::isfinite(hi)) bound_rows.emplace_back(j + 1, hi);
  }

  const int m = m0 + static_cast<int>(bound_rows.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, ncols);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m0; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = lp.constraint_matrix(i, j);
      a(i, cmap[j].pos) += v;
      if (cmap[j].neg >= 0) a(i, cmap[j].neg) -= v;
    }
    b(i) = lp.constraint_rhs(i);
  }
  for (size_t k = 0; k < bound_rows.size(); ++k) {
    const int i = m0 + static_cast<int>(k);
    const int j = std::abs(bound_rows[k].first) - 1;
    const double sgn = bound_rows[k].first > 0 ? 1.0 : -1.0;
    a(i, cmap[j].pos) += sgn;
    if (cmap[j].neg >= 0) a(i, cmap[j].neg) -= sgn;
    b(i) = bound_rows[k].second;
  }

  int nart = 0;
  for (int i = 0; i < m; ++i)
    if (b(i) < 0.0) ++nart;

  // Columns: [structural | slack | artificial].
  const int slack0 = ncols;
  const int art0 = ncols + m;
  const int total = ncols + m + nart;
  Tableau tab(m, total);
  {
    int k = 0;
    for (int i = 0; i < m; ++i) {
      const double sgn = b(i) < 0.0 ? -1.0 : 1.0;
      tab.t().row(i).head(ncols) = sgn * a.row(i);
      tab.t()(i, slack0 + i) = sgn;
      tab.t()(i, total) = sgn * b(i);
      if (b(i) < 0.0) {
        tab.t()(i, art0 + k) = 1.0;
        tab.basis()[i] = art0 + k;
        ++k;
      } else {
        tab.basis()[i] = slack0 + i;
      }
    }
  }

  LpSolution sol;
  const double bscale = 1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);

  if (nart > 0) {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(total);
    c1.tail(nart).setOnes();
    tab.set_costs(c1);
    std::vector<bool> allowed(total, true);
    tab.run(allowed, opt, opt.optimality_tol, sol.iterations);
    if (tab.objective_value() > opt.feasibility_tol * bscale) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
      if (tab.basis()[r] < art0) continue;
      int best = -1;
      double best_abs = opt.pivot_tol;
      for (int j = 0; j < art0; ++j) {
        const double v = std::abs(tab.t()(r, j));
        if (v > best_abs) {
          best_abs = v;
          best = j;
        }
      }
      if (best >= 0) tab.pivot(r, best);
    }
  }

  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(total);
  const double sgn = lp.sense == Sense::maximize ? -1.0 : 1.0;
  for (int j = 0; j < n; ++j) {
    c2(cmap[j].pos) += sgn * lp.objective(j);
    if (cmap[j].neg >= 0) c2(cmap[j].neg) -= sgn * lp.objective(j);
  }
  tab.set_costs(c2);
  std::vector<bool> allowed(total, true);
  for (int j = art0; j < total; ++j) allowed[j] = false;
  const double cscale = 1.0 + lp.objective.cwiseAbs().maxCoeff();
  if (!tab.run(allowed, opt, opt.optimality_tol * cscale, sol.iterations)) {
    sol.status = LpStatus::unbounded;
    return sol;
  }

  Eigen::VectorXd col = Eigen::VectorXd::Zero(total);
  for (int i = 0; i < m; ++i) col(tab.basis()[i]) = tab.rhs(i);
  sol.x.resize(n);
  for (int j = 0; j < n; ++j) {
    sol.x(j) = col(cmap[j].pos) - (cmap[j].neg >= 0 ? col(cmap[j].neg) : 0.0);
  }
  sol.value = lp.objective.dot(sol.x);
  sol.status = LpStatus::optimal;
  return sol;
}

bool nonnegative_combination(const Eigen::MatrixXd& generators, const Eigen::VectorXd& target,
                             Eigen::VectorXd* coefficients, double tol) {
  const auto dim = generators.rows();
  const auto k = generators.cols();
  if (target.size() != dim) throw std::invalid_argument("nonnegative_combination: length mismatch");
  if (k == 0) {
    const bool zero = target.cwiseAbs().maxCoeff() <= tol;
    if (zero && coefficients) coefficients->resize(0);
    return zero;
  }
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(k);
  lp.constraint_matrix.resize(2 * dim, k);
  lp.constraint_matrix << generators, -generators;
  lp.constraint_rhs.resize(2 * dim);
  lp.constraint_rhs << target, -target;
  lp.lower = Eigen::VectorXd::Zero(k);
  LpOptions opt;
  opt.feasibility_tol = tol;
  const LpSolution sol = solve_lp(lp, opt);
  if (sol.status != LpStatus::optimal) return false;
  const double resid = (generators * sol.x - target).cwiseAbs().maxCoeff();
  if (resid > tol * (1.0 + target.cwiseAbs().maxCoeff())) return false;
  if (coefficients) *coefficients = sol.x.cwiseMax(0.0);
  return true;
}

}  // namespace bekf
