#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bekf/cli.hpp"

namespace bekf::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(line, "line " + std::to_string(line) + ": '" + s + "' is not a number");
}

long parse_long(const std::string& s, int line) {
  try {
    size_t used = 0;
    const long v = std::stol(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(line, "line " + std::to_string(line) + ": '" + s + "' is not an integer");
}

std::uint64_t parse_u64(const std::string& s, int line) {
  try {
    size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      const unsigned long long v = std::stoull(s, &used, 0);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(line, "line " + std::to_string(line) + ": '" + s + "' is not an unsigned integer");
}

bool parse_bool(const std::string& s, int line) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(line, "line " + std::to_string(line) + ": '" + s + "' is not a boolean");
}

Eigen::MatrixXd parse_matrix(const std::string& s, int line) {
  std::vector<std::vector<double>> rows;
  std::stringstream rs(s);
  std::string row;
  while (std::getline(rs, row, ';')) {
    for (char& c : row)
      if (c == ',') c = ' ';
    std::stringstream es(row);
    std::vector<double> r;
    std::string tok;
    while (es >> tok) r.push_back(parse_double(tok, line));
    rows.push_back(std::move(r));
  }
  if (rows.empty() || rows[0].empty())
    throw ConfigError(line, "line " + std::to_string(line) + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw ConfigError(line, "line " + std::to_string(line) + ": ragged matrix rows");
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Eigen::VectorXd parse_vector(const std::string& s, int line) {
  const Eigen::MatrixXd m = parse_matrix(s, line);
  if (m.rows() != 1 && m.cols() != 1) throw ConfigError(line, "line " + std::to_string(line) + ": expected a vector");
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

std::string matrix_text(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += (j ? " " : "") + fmt17(m(i, j));
  }
  return out;
}

const std::map<std::string, std::set<std::string>>& grammar() {
  static const std::map<std::string, std::set<std::string>> g{
      {"experiment", {"model", "horizon", "obs_period", "micro_step", "bound_step", "n_runs", "seed", "threads"}},
      {"initial", {"mu", "sigma0"}},
      {"filters", {"bekf", "ekf"}},
      {"bound", {"certificate_stride", "integrator", "s_objective", "sos_half_degree"}},
      {"linear", {"a", "b", "h", "r"}},
  };
  return g;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string section;
  std::string raw;
  int line = 0;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(line, "line " + std::to_string(line) + ": malformed section header");
      section = trim(text.substr(1, text.size() - 2));
      if (!grammar().count(section))
        throw ConfigError(line, "line " + std::to_string(line) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (section.empty()) throw ConfigError(line, "line " + std::to_string(line) + ": key outside any section");
    if (!grammar().at(section).count(key))
      throw ConfigError(line, "line " + std::to_string(line) + ": unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(section + "." + key).second)
      throw ConfigError(line, "line " + std::to_string(line) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(line, "line " + std::to_string(line) + ": empty value for '" + key + "'");

    if (section == "experiment") {
      if (key == "model") c.model = value;
      else if (key == "horizon") c.horizon = parse_double(value, line);
      else if (key == "obs_period") c.obs_period = parse_double(value, line);
      else if (key == "micro_step") c.micro_step = parse_double(value, line);
      else if (key == "bound_step") c.bound_step = parse_double(value, line);
      else if (key == "n_runs") c.n_runs = parse_long(value, line);
      else if (key == "seed") c.seed = parse_u64(value, line);
      else if (key == "threads") c.threads = static_cast<int>(parse_long(value, line));
    } else if (section == "initial") {
      if (key == "mu") {
        c.mu = parse_vector(value, line);
      } else {
        const Eigen::MatrixXd m = parse_matrix(value, line);
        if (m.rows() != m.cols() || m != m.transpose())
          throw ConfigError(line, "line " + std::to_string(line) + ": sigma0 must be square and symmetric");
        c.sigma0 = SymMatrix(m);
      }
    } else if (section == "filters") {
      if (key == "bekf") c.run_bekf = parse_bool(value, line);
      else c.run_ekf = parse_bool(value, line);
    } else if (section == "bound") {
      if (key == "certificate_stride") c.certificate_stride = static_cast<int>(parse_long(value, line));
      else if (key == "sos_half_degree") c.sos_half_degree = static_cast<int>(parse_long(value, line));
      else if (key == "integrator") {
        if (value == "euler") c.integrator = SigmaIntegrator::euler;
        else if (value == "rk4") c.integrator = SigmaIntegrator::rk4;
        else throw ConfigError(line, "line " + std::to_string(line) + ": integrator must be euler or rk4");
      } else if (key == "s_objective") {
        if (value == "sigma") c.s_objective = SObjective::sigma;
        else if (value == "trace") c.s_objective = SObjective::trace;
        else throw ConfigError(line, "line " + std::to_string(line) + ": s_objective must be sigma or trace");
      }
    } else if (section == "linear") {
      Eigen::MatrixXd m = parse_matrix(value, line);
      if (key == "a") c.linear_a = m;
      else if (key == "b") c.linear_b = m;
      else if (key == "h") c.linear_h = m;
      else c.linear_r = m;
    }
  }

  try {
    c.check();
    const SystemModel model = model_from_config(c);
    if (model.dim_state != c.mu.size())
      throw std::invalid_argument("mu has " + std::to_string(c.mu.size()) + " entries but the model state has " +
                                  std::to_string(model.dim_state));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read " + path.string());
  return parse_config(in);
}

std::string describe_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n"
    << "model = " << c.model << "\n"
    << "horizon = " << fmt17(c.horizon) << "\n"
    << "obs_period = " << fmt17(c.obs_period) << "\n"
    << "micro_step = " << fmt17(c.micro_step) << "\n"
    << "bound_step = " << fmt17(c.bound_step) << "\n"
    << "n_runs = " << c.n_runs << "\n"
    << "seed = " << c.seed << "\n"
    << "threads = " << c.threads << "\n"
    << "\n[initial]\n"
    << "mu = " << matrix_text(c.mu.transpose()) << "\n"
    << "sigma0 = " << matrix_text(c.sigma0.matrix()) << "\n"
    << "\n[filters]\n"
    << "bekf = " << (c.run_bekf ? "true" : "false") << "\n"
    << "ekf = " << (c.run_ekf ? "true" : "false") << "\n"
    << "\n[bound]\n"
    << "certificate_stride = " << c.certificate_stride << "\n"
    << "integrator = " << to_string(c.integrator) << "\n"
    << "s_objective = " << to_string(c.s_objective) << "\n"
    << "sos_half_degree = " << c.sos_half_degree << "\n";
  if (c.model == "linear") {
    o << "\n[linear]\n"
      << "a = " << matrix_text(c.linear_a) << "\n"
      << "b = " << matrix_text(c.linear_b) << "\n"
      << "h = " << matrix_text(c.linear_h) << "\n"
      << "r = " << matrix_text(c.linear_r) << "\n";
  }
  return o.str();
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << fmt17(m(i, j));
    out << "\n";
  }
}

void write_frames(std::ostream& out, const Frames& f) {
  const int n = f.p.dim_state;
  out << "# dim_state " << n << " dim_sym " << f.p.dim_sym << "\n";
  out << "# P frame: " << f.p.members.size() << " matrices\n";
  for (size_t i = 0; i < f.p.members.size(); ++i) {
    out << "P " << i << "\n";
    write_matrix(out, f.p.members[i].matrix());
  }
  out << "# U generators: " << f.dual.u_gens.size() << " matrices\n";
  for (size_t i = 0; i < f.dual.u_gens.size(); ++i) {
    out << "U " << i << "\n";
    write_matrix(out, f.dual.u_gens[i].matrix());
  }
  out << "# T generators: " << f.dual.t_gens.size() << " matrices\n";
  for (size_t i = 0; i < f.dual.t_gens.size(); ++i) {
    out << "T " << i << "\n";
    write_matrix(out, f.dual.t_gens[i].matrix());
  }
  out << "# Gram matrix L\n"
      << "L\n";
  write_matrix(out, f.dual.gram_l);
}

int threads_from_env(int fallback) {
  const char* v = std::getenv("BEKF_THREADS");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long t = std::strtol(v, &end, 10);
  if (*end != '\0' || t < 1 || t > 4096) throw std::invalid_argument(std::string("BEKF_THREADS='") + v + "' is invalid");
  return static_cast<int>(t);
}

}  // namespace bekf::cli
