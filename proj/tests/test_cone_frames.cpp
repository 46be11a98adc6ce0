#include <doctest.h>

#include "bekf/cone_frames.hpp"
#include "bekf/lp.hpp"
#include "test_util.hpp"

using namespace bekf;
using testutil::max_abs;

namespace {

SymMatrix mat2(double a, double b, double c) { return SymMatrix(Eigen::Matrix2d{{a, b}, {b, c}}); }

}  // namespace

TEST_CASE("sym matrix storage and trace inner product") {
  Eigen::Matrix2d m{{1.0, 2.0}, {3.0, 4.0}};
  const SymMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == doctest::Approx(2.5));
  const SymMatrix a = mat2(1, 2, 3), b = mat2(-1, 0.5, 2);
  CHECK(inner(a, b) == doctest::Approx((a.matrix() * b.matrix()).trace()).epsilon(1e-15));
  CHECK(svec(a).dot(svec(b)) == doctest::Approx(inner(a, b)).epsilon(1e-15));
  CHECK(smat(svec(a), 2) == a);
  CHECK(floor_eigenvalues(mat2(1, 0, -1)).min_eigenvalue() >= 0.0);
}

TEST_CASE("p frame for N=1 is {1, -1}") {
  const PFrame f = build_p_frame(1);
  REQUIRE(f.members.size() == 2);
  CHECK(f.members[0](0, 0) == doctest::Approx(1.0));
  CHECK(f.members[1](0, 0) == doctest::Approx(-1.0));
  CHECK(inner(f.members[0], f.members[1]) == doctest::Approx(-1.0));
}

TEST_CASE("p frame gram identities and zero sum") {
  for (int dim = 1; dim <= 4; ++dim) {
    CAPTURE(dim);
    const PFrame f = build_p_frame(dim);
    const int n = dim * (dim + 1) / 2;
    REQUIRE(f.dim_sym == n);
    REQUIRE(static_cast<int>(f.members.size()) == n + 1);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i <= n; ++i) {
      sum += f.members[i].matrix();
      for (int j = 0; j <= n; ++j) {
        const double want = i == j ? 1.0 : -1.0 / n;
        CHECK(std::abs(inner(f.members[i], f.members[j]) - want) <= 1e-12);
      }
    }
    CHECK(max_abs(sum) <= 1e-12);
    CHECK(f.members[0] == SymMatrix(Eigen::MatrixXd::Identity(dim, dim) / std::sqrt(double(dim))));
  }
}

TEST_CASE("any n members of the p frame are linearly independent") {
  for (int dim = 1; dim <= 3; ++dim) {
    const PFrame f = build_p_frame(dim);
    const Eigen::MatrixXd cols = svec_columns(f.members);
    for (int drop = 0; drop <= f.dim_sym; ++drop) {
      Eigen::MatrixXd sub(f.dim_sym, f.dim_sym);
      int c = 0;
      for (int i = 0; i <= f.dim_sym; ++i)
        if (i != drop) sub.col(c++) = cols.col(i);
      CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(sub).rank() == f.dim_sym);
    }
  }
}

TEST_CASE("p frame positively spans the symmetric space") {
  PhiloxStream rng(11, 0, 0);
  for (int dim = 1; dim <= 4; ++dim) {
    const PFrame f = build_p_frame(dim);
    for (int k = 0; k < 1000; ++k) {
      const SymMatrix z = testutil::random_sym(rng, dim);
      double best = -1e300;
      for (const SymMatrix& p : f.members) best = std::max(best, inner(p, z));
      REQUIRE(best > 0.0);
    }
  }
}

TEST_CASE("p frame is deterministic") {
  const PFrame a = build_p_frame(3), b = build_p_frame(3);
  for (size_t i = 0; i < a.members.size(); ++i) CHECK(a.members[i] == b.members[i]);
}

TEST_CASE("default U generators") {
  const auto u2 = default_u_generators(2);
  REQUIRE(u2.size() == 4);
  CHECK(u2[0] == mat2(1, 0, 0));
  CHECK(u2[1] == mat2(0, 0, 1));
  CHECK(u2[2] == mat2(1, 1, 1));
  CHECK(u2[3] == mat2(1, -1, 1));
  const auto u1 = default_u_generators(1);
  REQUIRE(u1.size() == 1);
  CHECK(u1[0](0, 0) == 1.0);
  const auto u3 = default_u_generators(3);
  CHECK(u3.size() == 9);
  for (const SymMatrix& u : u3) {
    const Eigen::VectorXd ev = u.eigenvalues();
    CHECK(ev(0) >= -1e-12);
    CHECK(ev(1) <= 1e-12 * ev(2));
  }
}

TEST_CASE("dual generators of a three-matrix U set contain the hand solution") {
  const std::vector<SymMatrix> u{mat2(1, 0, 0), mat2(0, 0, 1), mat2(1, 1, 1)};
  const auto t = dual_generators(u);
  const SymMatrix want = mat2(1, -0.5, 0);
  bool found = false;
  for (const SymMatrix& ti : t) found = found || max_abs(ti.matrix() - want.matrix()) <= 1e-9;
  CHECK(found);
  for (const SymMatrix& ti : t)
    for (const SymMatrix& uj : u) CHECK(inner(ti, uj) >= -1e-9);
}

TEST_CASE("dual generators for N=1") {
  const std::vector<SymMatrix> u{SymMatrix(Eigen::MatrixXd::Ones(1, 1))};
  const auto t = dual_generators(u);
  REQUIRE(t.size() == 1);
  CHECK(t[0](0, 0) == doctest::Approx(1.0));
}

TEST_CASE("dual frame invariants for the default N=2 U set") {
  const DualFrame f = build_dual_frame(default_u_generators(2));
  REQUIRE(!f.t_gens.empty());
  for (const SymMatrix& t : f.t_gens)
    for (const SymMatrix& u : f.u_gens) CHECK(inner(t, u) >= -1e-9);
  CHECK(f.gram_l == f.gram_l.transpose());
  // Minimality: no generator is a nonnegative combination of the others.
  for (size_t i = 0; i < f.t_gens.size(); ++i) {
    std::vector<SymMatrix> others;
    for (size_t j = 0; j < f.t_gens.size(); ++j)
      if (j != i) others.push_back(f.t_gens[j]);
    CHECK_FALSE(nonnegative_combination(svec_columns(others), svec(f.t_gens[i])));
  }
}

TEST_CASE("dual generators are minimal for N=3") {
  const DualFrame f = build_dual_frame(default_u_generators(3));
  for (const SymMatrix& t : f.t_gens)
    for (const SymMatrix& u : f.u_gens) CHECK(inner(t, u) >= -1e-9);
  for (size_t i = 0; i < f.t_gens.size(); ++i) {
    std::vector<SymMatrix> others;
    for (size_t j = 0; j < f.t_gens.size(); ++j)
      if (j != i) others.push_back(f.t_gens[j]);
    CHECK_FALSE(nonnegative_combination(svec_columns(others), svec(f.t_gens[i])));
  }
}

TEST_CASE("degenerate U set is reported") {
  const std::vector<SymMatrix> u{mat2(1, 0, 0), mat2(2, 0, 0), mat2(3, 0, 0)};
  CHECK_THROWS_AS(dual_generators(u), DegenerateFrameError);
}

TEST_CASE("gram matrix") {
  const std::vector<SymMatrix> one{SymMatrix(Eigen::MatrixXd::Ones(1, 1))};
  CHECK(gram_matrix(one)(0, 0) == 1.0);
  const std::vector<SymMatrix> t{mat2(1, -0.5, 0)};
  CHECK(gram_matrix(t)(0, 0) == doctest::Approx(1.5));
  PhiloxStream rng(3, 0, 0);
  std::vector<SymMatrix> r;
  for (int i = 0; i < 5; ++i) r.push_back(testutil::random_sym(rng, 3));
  const Eigen::MatrixXd l = gram_matrix(r);
  CHECK(l == l.transpose());
  CHECK(l(1, 3) == doctest::Approx(inner(r[1], r[3])));
}

TEST_CASE("decomposition in the dual cone") {
  const DualFrame f = build_dual_frame(default_u_generators(2));
  {
    const auto lambda = decompose_in_dual_cone(f.t_gens[0], f);
    REQUIRE(lambda);
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(f.t_gens.size());
    unit(0) = 1.0;
    CHECK(max_abs(*lambda - unit) <= 1e-9);
  }
  const auto id = decompose_in_dual_cone(SymMatrix::identity(2), f);
  REQUIRE(id);
  CHECK(id->minCoeff() >= 0.0);
  CHECK_FALSE(decompose_in_dual_cone(mat2(-1, 0, 0), f));

  PhiloxStream rng(5, 0, 0);
  for (int k = 0; k < 100; ++k) {
    const SymMatrix m = testutil::random_psd(rng, 2);
    const auto lambda = decompose_in_dual_cone(m, f);
    REQUIRE(lambda);
    CHECK(lambda->minCoeff() >= 0.0);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
    for (size_t i = 0; i < f.t_gens.size(); ++i) sum += (*lambda)(static_cast<Eigen::Index>(i)) * f.t_gens[i].matrix();
    CHECK(max_abs(sum - m.matrix()) <= 1e-8);
  }
  for (int k = 0; k < 100; ++k) {
    const SymMatrix& u = f.u_gens[k % f.u_gens.size()];
    SymMatrix m = testutil::random_psd(rng, 2);
    m -= ((inner(m, u) + 0.1 + rng.uniform()) / inner(u, u)) * u;
    REQUIRE(inner(m, u) < 0.0);
    CHECK_FALSE(decompose_in_dual_cone(m, f));
  }
}
