#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "bekf/bound_dynamics.hpp"
#include "bekf/certificates.hpp"
#include "bekf/cli.hpp"
#include "bekf/filter.hpp"
#include "bekf/lp.hpp"
#include "bekf/random.hpp"
#include "bekf/sdp.hpp"

namespace bekf::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

CheckResult check(std::string name, bool pass, std::string detail = {}) {
  return CheckResult{std::move(name), pass, std::move(detail)};
}

SymMatrix random_sym(PhiloxStream& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  return SymMatrix(0.5 * (m + m.transpose()));
}

SymMatrix random_psd(PhiloxStream& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  return SymMatrix(m * m.transpose());
}

Eigen::MatrixXd random_stable(PhiloxStream& rng, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  const double shift = Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues().real().maxCoeff();
  return a - (std::max(shift, 0.0) + 0.2 + rng.uniform()) * Eigen::MatrixXd::Identity(n, n);
}

std::vector<CheckResult> suite_frames() {
  std::vector<CheckResult> out;
  PhiloxStream rng(0xf7a3e5ULL, 0, 0);
  for (int dim = 1; dim <= 4; ++dim) {
    const PFrame f = build_p_frame(dim);
    const int n = f.dim_sym;
    double gram_err = 0.0;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i <= n; ++i) {
      sum += f.members[i].matrix();
      for (int j = 0; j <= n; ++j) {
        const double want = i == j ? 1.0 : -1.0 / n;
        gram_err = std::max(gram_err, std::abs(inner(f.members[i], f.members[j]) - want));
      }
    }
    const std::string tag = "N=" + std::to_string(dim);
    out.push_back(check("p-frame gram identities " + tag, gram_err <= 1e-12, "max error " + num(gram_err)));
    out.push_back(check("p-frame sums to zero " + tag, sum.cwiseAbs().maxCoeff() <= 1e-12));
    int missed = 0;
    for (int k = 0; k < 1000; ++k) {
      const SymMatrix z = random_sym(rng, dim);
      double best = -1e300;
      for (const SymMatrix& p : f.members) best = std::max(best, inner(p, z));
      if (!(best > 0.0)) ++missed;
    }
    out.push_back(check("p-frame positive spanning " + tag, missed == 0, std::to_string(missed) + " of 1000 missed"));
    const PFrame again = build_p_frame(dim);
    bool same = true;
    for (int i = 0; i <= n; ++i) same = same && again.members[i] == f.members[i];
    out.push_back(check("p-frame deterministic " + tag, same));
  }
  return out;
}

std::vector<CheckResult> suite_dual_cone() {
  std::vector<CheckResult> out;
  PhiloxStream rng(0xd0a1c0ULL, 0, 0);
  for (int dim = 1; dim <= 3; ++dim) {
    const DualFrame f = build_dual_frame(default_u_generators(dim));
    const std::string tag = "N=" + std::to_string(dim);
    bool rank_one = true;
    for (const SymMatrix& u : f.u_gens) {
      const Eigen::VectorXd ev = u.eigenvalues();
      rank_one = rank_one && ev(0) >= -1e-12 && (ev.size() < 2 || ev(ev.size() - 2) <= 1e-12 * ev.maxCoeff());
    }
    out.push_back(check("U generators PSD rank one " + tag, rank_one));
    double worst = 1e300;
    for (const SymMatrix& t : f.t_gens)
      for (const SymMatrix& u : f.u_gens) worst = std::min(worst, inner(t, u));
    out.push_back(check("T generators pair nonnegatively with U " + tag, worst >= -1e-9, "min pairing " + num(worst)));
    out.push_back(check("L symmetric " + tag, f.gram_l == f.gram_l.transpose()));
  }
  const DualFrame f = build_dual_frame(default_u_generators(2));
  int failed = 0;
  double recon = 0.0;
  for (int k = 0; k < 100; ++k) {
    const SymMatrix m = random_psd(rng, 2);
    const auto lambda = decompose_in_dual_cone(m, f);
    if (!lambda || lambda->minCoeff() < 0.0) {
      ++failed;
      continue;
    }
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
    for (size_t i = 0; i < f.t_gens.size(); ++i) sum += (*lambda)(static_cast<Eigen::Index>(i)) * f.t_gens[i].matrix();
    recon = std::max(recon, (sum - m.matrix()).cwiseAbs().maxCoeff());
  }
  out.push_back(check("PSD matrices decompose in the dual cone", failed == 0 && recon <= 1e-8,
                      std::to_string(failed) + " failures, residual " + num(recon)));
  int accepted = 0;
  for (int k = 0; k < 100; ++k) {
    const SymMatrix& u = f.u_gens[static_cast<size_t>(k) % f.u_gens.size()];
    SymMatrix m = random_psd(rng, 2);
    // Push the pairing with u below zero.
    m -= ((inner(m, u) + 0.1 + rng.uniform()) / inner(u, u)) * u;
    if (decompose_in_dual_cone(m, f)) ++accepted;
  }
  out.push_back(check("matrices with a negative U pairing are rejected", accepted == 0,
                      std::to_string(accepted) + " wrongly accepted"));
  return out;
}

std::vector<CheckResult> suite_linear_equivalence() {
  std::vector<CheckResult> out;
  PhiloxStream rng(0x11ea7ULL, 0, 0);
  const Frames frames = build_frames(2);
  double deriv_err = 0.0, traj_err = 0.0, kf_err = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd a = random_stable(rng, 2);
    Eigen::MatrixXd b(2, 2);
    for (int i = 0; i < 4; ++i) b(i / 2, i % 2) = 0.5 * rng.normal();
    const Eigen::MatrixXd h = Eigen::RowVector2d(rng.normal(), rng.normal());
    const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, 0.01 + rng.uniform());
    const SystemModel model = make_linear_model(a, b, h, r);
    const SymMatrix sigma = random_psd(rng, 2);

    BoundConfig cfg;
    cfg.integrator = SigmaIntegrator::rk4;
    BoundPropagator prop(model, frames, cfg);
    const Eigen::Vector2d x0(rng.normal(), rng.normal());
    const SymMatrix d = prop.derivative(x0, sigma).matrix;
    const Eigen::MatrixXd lyap = a * sigma.matrix() + sigma.matrix() * a.transpose() + b * b.transpose();
    deriv_err = std::max(deriv_err, (d.matrix() - lyap).cwiseAbs().maxCoeff() / (1.0 + lyap.cwiseAbs().maxCoeff()));

    FilterState bk{x0, sigma, 0.0}, ek = bk;
    for (int step = 0; step < 5; ++step) {
      bk = bekf_time_update(bk, 0.2, prop);
      ek = ekf_time_update(ek, 0.2, model);
      const Eigen::VectorXd y = h * bk.estimate + Eigen::VectorXd::Constant(1, rng.normal());
      bk = bekf_measurement_update(bk, y, model);
      ek = ekf_measurement_update(ek, y, model);
      traj_err = std::max(traj_err, (bk.mse_bound.matrix() - ek.mse_bound.matrix()).cwiseAbs().maxCoeff() /
                                        (1.0 + ek.mse_bound.matrix().cwiseAbs().maxCoeff()));
      traj_err = std::max(traj_err, (bk.estimate - ek.estimate).cwiseAbs().maxCoeff());
    }

    // Textbook Kalman update as the reference.
    const Eigen::MatrixXd p = sigma.matrix();
    const Eigen::MatrixXd gain = p * h.transpose() * (h * p * h.transpose() + r).inverse();
    const Eigen::MatrixXd post = (Eigen::Matrix2d::Identity() - gain * h) * p;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, rng.normal());
    const FilterState upd = bekf_measurement_update(FilterState{x0, sigma, 0.0}, y, model);
    kf_err = std::max(kf_err, (upd.mse_bound.matrix() - post).cwiseAbs().maxCoeff());
    kf_err = std::max(kf_err, (upd.estimate - (x0 + gain * (y - h * x0))).cwiseAbs().maxCoeff());
  }
  out.push_back(check("bound derivative equals the Lyapunov right side", deriv_err <= 1e-8, "max rel error " + num(deriv_err)));
  out.push_back(check("BEKF and EKF agree on linear systems", traj_err <= 1e-8, "max error " + num(traj_err)));
  out.push_back(check("measurement update equals the Kalman update", kf_err <= 1e-8, "max error " + num(kf_err)));

  // Scalar Ornstein-Uhlenbeck against its closed form.
  const SystemModel ou = make_linear_model(Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Constant(1, 1, 1.0),
                                           Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const Frames f1 = build_frames(1);
  const auto [x5, s5] = propagate(ou, Eigen::VectorXd::Zero(1), SymMatrix::zero(1), 5.0, f1);
  const double want = 0.5 * (1.0 - std::exp(-10.0));
  out.push_back(check("scalar OU bound at t=5", std::abs(s5(0, 0) - want) <= 1e-3,
                      "got " + num(s5(0, 0)) + " want " + num(want)));
  return out;
}

std::vector<CheckResult> suite_certificates() {
  std::vector<CheckResult> out;
  PhiloxStream rng(0xce57ULL, 0, 0);
  const SystemModel model = example_model();
  const Frames frames = build_frames(2);
  ValidationOptions vopt;
  vopt.n_samples = 20000;
  double worst = -1e300;
  for (int k = 0; k < 5; ++k) {
    const double r = 10.0 * std::sqrt(rng.uniform());
    const double th = 2.0 * M_PI * rng.uniform();
    const Eigen::Vector2d x(r * std::cos(th), r * std::sin(th));
    const SymMatrix sigma = random_psd(rng, 2) + 0.01 * SymMatrix::identity(2);
    const auto certs = certify_frame(model, x, sigma, frames.p);
    for (size_t i = 0; i < certs.size(); ++i)
      worst = std::max(worst, validate_certificate(model, x, frames.p.members[i], certs[i], vopt));
  }
  out.push_back(check("example certificates hold on sampled errors", worst <= 1e-6, "worst slack " + num(worst)));

  double diff = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Eigen::MatrixXd a = random_stable(rng, 2);
    Eigen::MatrixXd b(2, 1);
    b << rng.normal(), rng.normal();
    const SystemModel lin = make_linear_model(a, b, Eigen::RowVector2d(1, 0), Eigen::MatrixXd::Constant(1, 1, 1.0));
    const SymMatrix p = random_sym(rng, 2);
    const SymMatrix sigma = random_psd(rng, 2) + 0.1 * SymMatrix::identity(2);
    const Certificate exact = certify_linear(a, b, p);
    const Certificate sos = certify_sos(lin, Eigen::Vector2d::Zero(), sigma, p);
    diff = std::max(diff, (exact.q_matrix.matrix() - sos.q_matrix.matrix()).cwiseAbs().maxCoeff());
    diff = std::max(diff, std::abs(exact.q_scalar - sos.q_scalar));
  }
  out.push_back(check("SOS path reproduces the linear closed form", diff <= 1e-6, "max difference " + num(diff)));

  const SystemModel blowup = make_rational_model(
      make_rational_drift({Polynomial::constant(1, 1.0) + Polynomial::variable(1, 0) * Polynomial::variable(1, 0)},
                          Polynomial::constant(1, 1.0), 0),
      {Polynomial::constant(1, 1.0)}, 1, Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  bool rejected = false;
  try {
    certify_sos(blowup, Eigen::VectorXd::Constant(1, 0.5), SymMatrix::identity(1), SymMatrix::identity(1));
  } catch (const CertificateInfeasible&) {
    rejected = true;
  }
  out.push_back(check("finite-escape drift has no certificate", rejected));
  return out;
}

std::vector<CheckResult> suite_solvers() {
  std::vector<CheckResult> out;
  PhiloxStream rng(0x501feULL, 0, 0);
  double worst = 0.0;
  int status_mismatch = 0;
  for (int k = 0; k < 200; ++k) {
    LinearProgram lp;
    lp.sense = Sense::maximize;
    lp.objective = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    lp.constraint_matrix.resize(8, 3);
    lp.constraint_rhs.resize(8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 3; ++j) lp.constraint_matrix(i, j) = rng.normal();
      lp.constraint_rhs(i) = 1.0 + rng.uniform();
    }
    lp.lower = Eigen::Vector3d::Constant(-10.0);
    lp.upper = Eigen::Vector3d::Constant(10.0);
    const LpSolution sol = solve_lp(lp);
    // Vertex enumeration over the 14 constraints including the box.
    Eigen::MatrixXd a(14, 3);
    Eigen::VectorXd b(14);
    a.topRows(8) = lp.constraint_matrix;
    b.head(8) = lp.constraint_rhs;
    a.middleRows(8, 3) = Eigen::Matrix3d::Identity();
    b.segment(8, 3).setConstant(10.0);
    a.bottomRows(3) = -Eigen::Matrix3d::Identity();
    b.tail(3).setConstant(10.0);
    double best = -1e300;
    for (int i = 0; i < 14; ++i)
      for (int j = i + 1; j < 14; ++j)
        for (int l = j + 1; l < 14; ++l) {
          Eigen::Matrix3d m;
          m << a.row(i), a.row(j), a.row(l);
          if (std::abs(m.determinant()) < 1e-12) continue;
          const Eigen::Vector3d v = m.lu().solve(Eigen::Vector3d(b(i), b(j), b(l)));
          if (((a * v) - b).maxCoeff() <= 1e-9) best = std::max(best, lp.objective.dot(v));
        }
    if (sol.status != LpStatus::optimal) {
      ++status_mismatch;
      continue;
    }
    worst = std::max(worst, std::abs(sol.value - best));
  }
  out.push_back(check("LP matches vertex enumeration", status_mismatch == 0 && worst <= 1e-9,
                      "max error " + num(worst) + ", " + std::to_string(status_mismatch) + " status mismatches"));

  LinearProgram unb;
  unb.sense = Sense::maximize;
  unb.objective = Eigen::VectorXd::Ones(1);
  unb.constraint_matrix = -Eigen::MatrixXd::Ones(1, 1);
  unb.constraint_rhs = Eigen::VectorXd::Zero(1);
  out.push_back(check("LP reports unbounded", solve_lp(unb).status == LpStatus::unbounded));

  SemidefiniteProgram sdp;
  sdp.gram_dim = 2;
  sdp.eq_gram = {Eigen::Matrix2d{{1, 0}, {0, 0}}};
  sdp.eq_rhs = Eigen::VectorXd::Ones(1);
  sdp.objective_gram = Eigen::Matrix2d::Identity();
  sdp.objective_free.resize(0);
  const SdpSolution s = solve_sdp(sdp);
  out.push_back(check("SDP min trace with X11 = 1", s.status == SdpStatus::optimal && std::abs(s.value - 1.0) <= 1e-6,
                      "value " + num(s.value)));
  return out;
}

const std::map<std::string, std::function<std::vector<CheckResult>()>>& registry() {
  static const std::map<std::string, std::function<std::vector<CheckResult>()>> r{
      {"frames", suite_frames},
      {"dual-cone", suite_dual_cone},
      {"linear-equivalence", suite_linear_equivalence},
      {"certificates", suite_certificates},
      {"solvers", suite_solvers},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& validation_suites() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : registry()) v.push_back(k);
    return v;
  }();
  return names;
}

std::vector<CheckResult> run_validation_suite(const std::string& suite) {
  const auto it = registry().find(suite);
  if (it == registry().end()) throw std::invalid_argument("unknown suite '" + suite + "'");
  return it->second();
}

}  // namespace bekf::cli
