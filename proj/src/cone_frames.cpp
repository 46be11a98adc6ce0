#include "bekf/cone_frames.hpp"

#include <cmath>

#include "bekf/lp.hpp"

namespace bekf {

namespace {

constexpr double kOrthoTol = 1e-9;

// Visit every k-subset of {0..n-1} in lexicographic order.
template <typename F>
void for_each_subset(int n, int k, F&& visit) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

Eigen::MatrixXd svec_columns(std::span<const SymMatrix> members) {
  if (members.empty()) return {};
  const int n = sym_dim(members.front().dim());
  Eigen::MatrixXd out(n, members.size());
  for (size_t i = 0; i < members.size(); ++i) out.col(i) = svec(members[i]);
  return out;
}

PFrame build_p_frame(int dim) {
  if (dim < 1) throw std::invalid_argument("build_p_frame: dimension must be positive");
  const int n = sym_dim(dim);
  PFrame frame;
  frame.dim_state = dim;
  frame.dim_sym = n;

  // Work in svec coordinates where the trace inner product is the dot product.
  std::vector<Eigen::VectorXd> p;
  p.reserve(n + 1);
  p.push_back(svec(SymMatrix::identity(dim)) / std::sqrt(static_cast<double>(dim)));

  // Orthonormal basis of span{P_1..P_k}: P_1 and the S's chosen so far.
  std::vector<Eigen::VectorXd> ortho{p.front()};
  Eigen::VectorXd running_sum = p.front();
  int next_canonical = 0;

  for (int k = 1; k <= n - 1; ++k) {
    Eigen::VectorXd s;
    while (true) {
      if (next_canonical >= n) throw std::logic_error("build_p_frame: canonical basis exhausted");
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, next_canonical++);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : ortho) v -= q.dot(v) * q;
      const double norm = v.norm();
      if (norm > 1e-6) {
        s = v / norm;
        break;
      }
    }
    ortho.push_back(s);
    const double alpha = -1.0 / static_cast<double>(n - (k - 1));
    const double beta = std::sqrt(1.0 - static_cast<double>(k) / (static_cast<double>(n) * (n - (k - 1))));
    Eigen::VectorXd next = alpha * running_sum + beta * s;
    running_sum += next;
    p.push_back(std::move(next));
  }
  p.push_back(-running_sum);

  frame.members.reserve(p.size());
  for (const auto& v : p) frame.members.push_back(smat(v, dim));
  return frame;
}

std::vector<SymMatrix> default_u_generators(int dim) {
  if (dim < 1) throw std::invalid_argument("default_u_generators: dimension must be positive");
  std::vector<SymMatrix> out;
  auto rank_one = [dim](const Eigen::VectorXd& v) { return SymMatrix(Eigen::MatrixXd(v * v.transpose())); };
  for (int i = 0; i < dim; ++i) out.push_back(rank_one(Eigen::VectorXd::Unit(dim, i)));
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      out.push_back(rank_one(Eigen::VectorXd::Unit(dim, i) + Eigen::VectorXd::Unit(dim, j)));
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      out.push_back(rank_one(Eigen::VectorXd::Unit(dim, i) - Eigen::VectorXd::Unit(dim, j)));
  return out;
}

std::vector<SymMatrix> dual_generators(std::span<const SymMatrix> u_gens) {
  if (u_gens.empty()) throw std::invalid_argument("dual_generators: no generators");
  const int dim = u_gens.front().dim();
  const int n = sym_dim(dim);
  const int m = static_cast<int>(u_gens.size());
  if (m < n) throw DegenerateFrameError("dual_generators: fewer generators than the symmetric dimension");
  const Eigen::MatrixXd u = svec_columns(u_gens);
  {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(u);
    lu.setThreshold(kOrthoTol);
    if (lu.rank() < n) throw DegenerateFrameError("dual_generators: generators do not span the symmetric space");
  }

  // Candidates: for each nonsingular n-subset, T with Tr{T U_k} = delta_ik on the subset.
  std::vector<Eigen::VectorXd> kept;
  std::vector<Eigen::VectorXd> directions;
  for_each_subset(m, n, [&](const std::vector<int>& subset) {
    Eigen::MatrixXd sys(n, n);
    for (int r = 0; r < n; ++r) sys.row(r) = u.col(subset[r]).transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    lu.setThreshold(kOrthoTol);
    if (!lu.isInvertible()) return;
    const Eigen::MatrixXd inv = lu.inverse();
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd t = inv.col(i);
      const Eigen::VectorXd pairing = u.transpose() * t;
      if (pairing.minCoeff() < -kOrthoTol) continue;
      const Eigen::VectorXd dir = t / t.norm();
      bool duplicate = false;
      for (const auto& d : directions) {
        if ((d - dir).norm() <= kOrthoTol) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
      directions.push_back(dir);
      kept.push_back(t);
    }
  });
  if (kept.empty()) throw DegenerateFrameError("dual_generators: no candidate survived filtering");

  // Remove candidates that are nonnegative combinations of the remaining ones.
  std::vector<bool> active(kept.size(), true);
  for (size_t i = 0; i < kept.size(); ++i) {
    std::vector<int> others;
    for (size_t j = 0; j < kept.size(); ++j)
      if (j != i && active[j]) others.push_back(static_cast<int>(j));
    if (others.empty()) continue;
    Eigen::MatrixXd g(n, others.size());
    for (size_t c = 0; c < others.size(); ++c) g.col(c) = kept[others[c]];
    if (nonnegative_combination(g, kept[i], nullptr, kOrthoTol)) active[i] = false;
  }

  std::vector<SymMatrix> out;
  for (size_t i = 0; i < kept.size(); ++i)
    if (active[i]) out.push_back(smat(kept[i], dim));
  return out;
}

Eigen::MatrixXd gram_matrix(std::span<const SymMatrix> t_gens) {
  if (t_gens.empty()) throw std::invalid_argument("gram_matrix: empty generator set");
  const auto k = static_cast<Eigen::Index>(t_gens.size());
  Eigen::MatrixXd l(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      const double v = inner(t_gens[i], t_gens[j]);
      l(i, j) = v;
      l(j, i) = v;
    }
  }
  return l;
}

DualFrame build_dual_frame(std::vector<SymMatrix> u_gens) {
  DualFrame frame;
  frame.t_gens = dual_generators(u_gens);
  frame.u_gens = std::move(u_gens);
  frame.gram_l = gram_matrix(frame.t_gens);
  return frame;
}

Frames build_frames(int dim) {
  return Frames{build_p_frame(dim), build_dual_frame(default_u_generators(dim))};
}

std::optional<Eigen::VectorXd> decompose_in_dual_cone(const SymMatrix& m, const DualFrame& frame, double tol) {
  if (frame.t_gens.empty()) throw std::invalid_argument("decompose_in_dual_cone: frame not built");
  if (m.dim() != frame.t_gens.front().dim()) throw std::invalid_argument("decompose_in_dual_cone: dimension mismatch");
  Eigen::VectorXd lambda;
  if (!nonnegative_combination(svec_columns(frame.t_gens), svec(m), &lambda, tol)) return std::nullopt;
  return lambda;
}

}  // namespace bekf
