#include "bekf/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <omp.h>

#include "bekf/cone_frames.hpp"
#include "bekf/filter.hpp"

namespace bekf {

namespace {

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

long checked_ratio(double num, double den, const char* what) {
  const double r = num / den;
  const long k = std::lround(r);
  if (k < 0 || std::abs(r - static_cast<double>(k)) > 1e-6)
    throw std::invalid_argument(std::string("experiment config: ") + what + " is not an integer multiple");
  return k;
}

}  // namespace

SystemModel example_model() {
  Eigen::Matrix2d au, as;
  au << 1, 1, -1, 1;
  as << -1, 1, -1, -1;

  const Polynomial x1 = Polynomial::variable(2, 0);
  const Polynomial x2 = Polynomial::variable(2, 1);
  const Polynomial m = (Polynomial::constant(2, 1.0) + x1 * x1 + x2 * x2) * Polynomial::constant(2, 1.0 / 25.0);
  std::vector<Polynomial> num;
  for (int i = 0; i < 2; ++i) {
    const Polynomial ax = Polynomial::constant(2, au(i, 0)) * x1 + Polynomial::constant(2, au(i, 1)) * x2;
    const Polynomial sx = Polynomial::constant(2, as(i, 0)) * x1 + Polynomial::constant(2, as(i, 1)) * x2;
    num.push_back(ax + m * sx);
  }
  std::vector<Polynomial> diff{Polynomial::constant(2, 0.2), Polynomial::constant(2, 0.0),
                               Polynomial::constant(2, 0.0), Polynomial::constant(2, 0.2)};

  SystemModel model = make_rational_model(make_rational_drift(std::move(num), m, 1), std::move(diff), 2,
                                          Eigen::RowVector2d(1.0, 0.0), Eigen::MatrixXd::Constant(1, 1, 1e-4));
  model.name = "example";
  model.drift = [au, as](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const double mx = (1.0 + x.squaredNorm()) / 25.0;
    return au * x / mx + as * x;
  };
  model.diffusion = [](const Eigen::VectorXd&) -> Eigen::MatrixXd { return 0.2 * Eigen::Matrix2d::Identity(); };
  model.jacobian = [au, as](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    const double mx = (1.0 + x.squaredNorm()) / 25.0;
    const Eigen::Vector2d grad = 2.0 * x / 25.0;
    return au / mx - (au * x) * grad.transpose() / (mx * mx) + as;
  };
  return model;
}

SdePath simulate_sde(const SystemModel& model, const Eigen::VectorXd& x0, double micro_step, double horizon,
                     PhiloxStream& rng) {
  if (!(micro_step > 0.0)) throw std::invalid_argument("simulate_sde: micro_step must be positive");
  if (horizon < 0.0) throw std::invalid_argument("simulate_sde: negative horizon");
  const long n = std::lround(horizon / micro_step);
  SdePath path;
  path.seed = rng.seed();
  path.substream_a = rng.substream_a();
  path.substream_b = rng.substream_b();
  path.times.reserve(static_cast<size_t>(n + 1));
  path.states.reserve(static_cast<size_t>(n + 1));
  path.times.push_back(0.0);
  path.states.push_back(x0);
  const double sq = std::sqrt(micro_step);
  Eigen::VectorXd x = x0;
  for (long k = 0; k < n; ++k) {
    const Eigen::VectorXd xi = rng.normal_vector(model.dim_noise);
    x = x + model.drift(x) * micro_step + model.diffusion(x) * (sq * xi);
    if (!x.allFinite()) throw SimulationError(k + 1, "simulate_sde: non-finite state at step " + std::to_string(k + 1));
    path.times.push_back(static_cast<double>(k + 1) * micro_step);
    path.states.push_back(x);
  }
  return path;
}

Eigen::VectorXd observe(const Eigen::VectorXd& x, const SystemModel& model, PhiloxStream& rng) {
  const Eigen::VectorXd xi = rng.normal_vector(model.dim_obs());
  return model.obs_matrix * x + psd_factor(model.obs_noise_cov) * xi;
}

double normalized_error(const Eigen::VectorXd& e_tilde, const SymMatrix& sigma) {
  const Eigen::Index n = e_tilde.size();
  const Eigen::MatrixXd reg = sigma.matrix() + 1e-12 * Eigen::MatrixXd::Identity(n, n);
  const double q = e_tilde.dot(reg.ldlt().solve(e_tilde));
  return std::sqrt(std::max(q, 0.0) / static_cast<double>(n));
}

long ExperimentConfig::num_steps() const { return checked_ratio(horizon, bound_step, "horizon / bound_step"); }
long ExperimentConfig::steps_per_observation() const {
  return checked_ratio(obs_period, bound_step, "obs_period / bound_step");
}
long ExperimentConfig::micro_per_step() const { return checked_ratio(bound_step, micro_step, "bound_step / micro_step"); }

void ExperimentConfig::check() const {
  if (!(horizon >= 0.0) || !(obs_period > 0.0) || !(micro_step > 0.0) || !(bound_step > 0.0))
    throw std::invalid_argument("experiment config: times must be positive");
  if (n_runs < 1) throw std::invalid_argument("experiment config: n_runs must be >= 1");
  if (certificate_stride < 1) throw std::invalid_argument("experiment config: certificate_stride must be >= 1");
  if (sos_half_degree < 0) throw std::invalid_argument("experiment config: sos_half_degree must be >= 0");
  if (threads < 0) throw std::invalid_argument("experiment config: threads must be >= 0");
  if (!run_bekf && !run_ekf) throw std::invalid_argument("experiment config: no filter enabled");
  if (mu.size() != sigma0.dim()) throw std::invalid_argument("experiment config: mu and sigma0 dimensions differ");
  if (sigma0.min_eigenvalue() < -1e-12) throw std::invalid_argument("experiment config: sigma0 is not PSD");
  num_steps();
  steps_per_observation();
  micro_per_step();
  checked_ratio(obs_period, micro_step, "obs_period / micro_step");
}

SystemModel model_from_config(const ExperimentConfig& config) {
  if (config.model == "example") return example_model();
  if (config.model == "linear") {
    SystemModel m = make_linear_model(config.linear_a, config.linear_b, config.linear_h, config.linear_r);
    m.name = "linear";
    return m;
  }
  throw std::invalid_argument("unknown model '" + config.model + "'");
}

const FilterCurves* ExperimentResult::find(const std::string& name) const {
  for (const FilterCurves& f : filters)
    if (f.name == name) return &f;
  return nullptr;
}

namespace {

struct FilterTrace {
  std::vector<double> norm_err, trace_bound, sq_err;
  std::vector<Eigen::MatrixXd> bound, outer, prior_bound, prior_outer;
};

struct Episode {
  bool ok = true;
  std::string reason;
  std::vector<FilterTrace> filters;
};

enum class Kind { bekf, ekf };

class Runner {
 public:
  Runner(const ExperimentConfig& config, const SystemModel& model)
      : config_(config), model_(model), frames_(build_frames(model.dim_state)) {
    config_.check();
    if (model.dim_state != config.mu.size()) throw std::invalid_argument("experiment: mu does not match the model");
    if (config.run_bekf) kinds_.push_back(Kind::bekf);
    if (config.run_ekf) kinds_.push_back(Kind::ekf);
    bound_.step = config.bound_step;
    bound_.integrator = config.integrator;
    bound_.certificate_stride = config.certificate_stride;
    bound_.select.objective = config.s_objective;
    bound_.sos.half_degree = config.sos_half_degree;
    n_steps_ = config.num_steps();
    per_obs_ = config.steps_per_observation();
    micro_ = config.micro_per_step();
  }

  Episode episode(long k) const {
    Episode ep;
    try {
      const auto sub = static_cast<std::uint32_t>(k);
      PhiloxStream truth_rng(config_.seed, sub, 0), obs_rng(config_.seed, sub, 1), init_rng(config_.seed, sub, 2);
      const SdePath path =
          simulate_sde(model_, config_.mu, config_.micro_step, static_cast<double>(n_steps_ * micro_) * config_.micro_step,
                       truth_rng);
      std::vector<Eigen::VectorXd> ys;
      for (long j = 0; j <= n_steps_; j += per_obs_) ys.push_back(observe(path.states[j * micro_], model_, obs_rng));
      const Eigen::VectorXd x0 = config_.mu + psd_factor(config_.sigma0.matrix()) * init_rng.normal_vector(config_.mu.size());
      for (Kind kind : kinds_) ep.filters.push_back(run_filter(kind, path, ys, x0));
    } catch (const std::exception& e) {
      ep.ok = false;
      ep.reason = e.what();
      ep.filters.clear();
    }
    return ep;
  }

  ExperimentResult aggregate(const std::vector<Episode>& eps) const {
    ExperimentResult out;
    out.n_runs = config_.n_runs;
    for (long j = 0; j <= n_steps_; ++j) out.times.push_back(static_cast<double>(j) * config_.bound_step);
    for (long j = 0; j <= n_steps_; j += per_obs_) out.obs_times.push_back(static_cast<double>(j) * config_.bound_step);
    long good = 0;
    for (size_t k = 0; k < eps.size(); ++k) {
      if (eps[k].ok) {
        ++good;
      } else {
        out.aborted_runs.push_back(static_cast<long>(k));
        out.abort_reasons.push_back(eps[k].reason);
      }
    }
    if (static_cast<double>(out.aborted_runs.size()) > 0.01 * static_cast<double>(config_.n_runs) || good == 0)
      throw ExperimentFailure(out.aborted_runs.front(), "run " + std::to_string(out.aborted_runs.front()) +
                                                            " aborted: " + out.abort_reasons.front() + " (" +
                                                            std::to_string(out.aborted_runs.size()) + " of " +
                                                            std::to_string(config_.n_runs) + " runs failed)");

    const size_t nt = static_cast<size_t>(n_steps_ + 1);
    const size_t no = out.obs_times.size();
    const int n = model_.dim_state;
    const double inv = 1.0 / static_cast<double>(good);
    for (size_t f = 0; f < kinds_.size(); ++f) {
      FilterCurves c;
      c.name = kinds_[f] == Kind::bekf ? "bekf" : "ekf";
      std::vector<double> ne(nt, 0.0), tb(nt, 0.0), se(nt, 0.0);
      std::vector<Eigen::MatrixXd> b(no, Eigen::MatrixXd::Zero(n, n)), o = b, pb = b, po = b;
      for (const Episode& ep : eps) {
        if (!ep.ok) continue;
        const FilterTrace& tr = ep.filters[f];
        for (size_t j = 0; j < nt; ++j) {
          ne[j] += tr.norm_err[j];
          tb[j] += tr.trace_bound[j];
          se[j] += tr.sq_err[j];
        }
        for (size_t i = 0; i < no; ++i) {
          b[i] += tr.bound[i];
          o[i] += tr.outer[i];
          pb[i] += tr.prior_bound[i];
          po[i] += tr.prior_outer[i];
        }
      }
      for (size_t j = 0; j < nt; ++j) {
        c.mean_norm_err.push_back(ne[j] * inv);
        c.trace_bound_mean.push_back(tb[j] * inv);
        c.trace_sample_mse.push_back(se[j] * inv);
      }
      for (size_t i = 0; i < no; ++i) {
        c.obs_bound_mean.emplace_back(b[i] * inv);
        c.obs_sample_mse.emplace_back(o[i] * inv);
        c.obs_prior_bound_mean.emplace_back(pb[i] * inv);
        c.obs_prior_sample_mse.emplace_back(po[i] * inv);
      }
      out.filters.push_back(std::move(c));
    }
    return out;
  }

  long n_runs() const { return config_.n_runs; }

 private:
  FilterTrace run_filter(Kind kind, const SdePath& path, const std::vector<Eigen::VectorXd>& ys,
                         const Eigen::VectorXd& x0) const {
    FilterTrace tr;
    FilterState st{x0, config_.sigma0, 0.0};
    BoundPropagator prop(model_, frames_, bound_);
    for (long j = 0; j <= n_steps_; ++j) {
      const Eigen::VectorXd& x = path.states[static_cast<size_t>(j * micro_)];
      if (j % per_obs_ == 0) {
        const Eigen::VectorXd e = st.estimate - x;
        tr.prior_bound.push_back(st.mse_bound.matrix());
        tr.prior_outer.push_back(e * e.transpose());
        const Eigen::VectorXd& y = ys[static_cast<size_t>(j / per_obs_)];
        st = kind == Kind::bekf ? bekf_measurement_update(st, y, model_) : ekf_measurement_update(st, y, model_);
        const Eigen::VectorXd e2 = st.estimate - x;
        tr.bound.push_back(st.mse_bound.matrix());
        tr.outer.push_back(e2 * e2.transpose());
      }
      const Eigen::VectorXd e = st.estimate - x;
      tr.norm_err.push_back(normalized_error(e, st.mse_bound));
      tr.trace_bound.push_back(st.mse_bound.trace());
      tr.sq_err.push_back(e.squaredNorm());
      if (!st.estimate.allFinite() || !st.mse_bound.matrix().allFinite())
        throw std::runtime_error("non-finite filter state at t = " + std::to_string(st.time));
      if (j == n_steps_) break;
      st = kind == Kind::bekf ? bekf_time_update(st, config_.bound_step, prop)
                              : ekf_time_update(st, config_.bound_step, model_, config_.bound_step);
    }
    return tr;
  }

  ExperimentConfig config_;
  const SystemModel& model_;
  Frames frames_;
  std::vector<Kind> kinds_;
  BoundConfig bound_;
  long n_steps_ = 0, per_obs_ = 1, micro_ = 1;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const SystemModel& model) {
  const Runner runner(config, model);
  std::vector<Episode> eps(static_cast<size_t>(runner.n_runs()));
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long k = 0; k < runner.n_runs(); ++k) eps[static_cast<size_t>(k)] = runner.episode(k);
  return runner.aggregate(eps);
}

ExperimentResult run_experiment_serial(const ExperimentConfig& config, const SystemModel& model) {
  const Runner runner(config, model);
  std::vector<Episode> eps;
  eps.reserve(static_cast<size_t>(runner.n_runs()));
  for (long k = 0; k < runner.n_runs(); ++k) eps.push_back(runner.episode(k));
  return runner.aggregate(eps);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const SystemModel model = model_from_config(config);
  return run_experiment(config, model);
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
  out << "time,filter,mean_norm_err,trace_bound_mean,trace_sample_mse\n";
  char buf[160];
  for (size_t j = 0; j < result.times.size(); ++j) {
    for (const FilterCurves& c : result.filters) {
      std::snprintf(buf, sizeof buf, "%.10g,%s,%.10g,%.10g,%.10g\n", result.times[j], c.name.c_str(),
                    c.mean_norm_err[j], c.trace_bound_mean[j], c.trace_sample_mse[j]);
      out << buf;
    }
  }
}

}  // namespace bekf
