#include <doctest.h>

#include "bekf/lp.hpp"
#include "bekf/sdp.hpp"
#include "test_util.hpp"

using namespace bekf;

namespace {

// Brute force over every basis of three active constraints.
double vertex_enumeration_max(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::Vector3d& c) {
  double best = -1e300;
  const int m = static_cast<int>(a.rows());
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int l = j + 1; l < m; ++l) {
        Eigen::Matrix3d sub;
        sub << a.row(i), a.row(j), a.row(l);
        if (std::abs(sub.determinant()) < 1e-12) continue;
        const Eigen::Vector3d v = sub.fullPivLu().solve(Eigen::Vector3d(b(i), b(j), b(l)));
        if ((a * v - b).maxCoeff() <= 1e-9) best = std::max(best, c.dot(v));
      }
  return best;
}

}  // namespace

TEST_CASE("lp: single variable box") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = Eigen::VectorXd::Ones(1);
  lp.constraint_matrix = Eigen::MatrixXd{{1.0}, {-1.0}};
  lp.constraint_rhs = Eigen::Vector2d(3.0, 1.0);
  const LpSolution s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.value == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("lp: two variables with a cut") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = Eigen::Vector2d(1.0, 1.0);
  lp.constraint_matrix = Eigen::MatrixXd{{1, 0}, {0, 1}, {1, 1}};
  lp.constraint_rhs = Eigen::Vector3d(1.0, 2.0, 2.5);
  const LpSolution s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.value == doctest::Approx(2.5).epsilon(1e-12));
  CHECK((lp.constraint_matrix * s.x - lp.constraint_rhs).maxCoeff() <= 1e-9);
}

TEST_CASE("lp: unbounded and infeasible") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = Eigen::VectorXd::Ones(1);
  lp.constraint_matrix = -Eigen::MatrixXd::Ones(1, 1);
  lp.constraint_rhs = Eigen::VectorXd::Zero(1);
  CHECK(solve_lp(lp).status == LpStatus::unbounded);

  lp.constraint_matrix = Eigen::MatrixXd{{1.0}, {-1.0}};
  lp.constraint_rhs = Eigen::Vector2d(-1.0, -1.0);
  CHECK(solve_lp(lp).status == LpStatus::infeasible);
}

TEST_CASE("lp: matches vertex enumeration on random instances") {
  PhiloxStream rng(21, 0, 0);
  for (int k = 0; k < 500; ++k) {
    LinearProgram lp;
    lp.sense = k % 2 ? Sense::maximize : Sense::minimize;
    const Eigen::Vector3d c(rng.normal(), rng.normal(), rng.normal());
    lp.objective = c;
    lp.constraint_matrix = testutil::gaussian(rng, 8, 3);
    lp.constraint_rhs.resize(8);
    for (int i = 0; i < 8; ++i) lp.constraint_rhs(i) = 0.5 + rng.uniform();
    lp.lower = Eigen::Vector3d::Constant(-5.0);
    lp.upper = Eigen::Vector3d::Constant(5.0);
    Eigen::MatrixXd a(14, 3);
    Eigen::VectorXd b(14);
    a << lp.constraint_matrix, Eigen::Matrix3d::Identity(), -Eigen::Matrix3d::Identity();
    b << lp.constraint_rhs, Eigen::VectorXd::Constant(6, 5.0);
    const double sign = lp.sense == Sense::maximize ? 1.0 : -1.0;
    const double want = sign * vertex_enumeration_max(a, b, sign * c);
    const LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(std::abs(s.value - want) <= 1e-9);
    CHECK((a * s.x - b).maxCoeff() <= 1e-9);
  }
}

TEST_CASE("lp: deterministic") {
  PhiloxStream rng(4, 0, 0);
  LinearProgram lp;
  lp.objective = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  lp.constraint_matrix = testutil::gaussian(rng, 6, 3);
  lp.constraint_rhs = Eigen::VectorXd::Ones(6);
  lp.lower = Eigen::Vector3d::Constant(-1.0);
  lp.upper = Eigen::Vector3d::Constant(1.0);
  const LpSolution a = solve_lp(lp), b = solve_lp(lp);
  CHECK(a.x == b.x);
  CHECK(a.value == b.value);
}

TEST_CASE("nonnegative combination") {
  const Eigen::MatrixXd g = Eigen::Matrix2d::Identity();
  Eigen::VectorXd coef;
  CHECK(nonnegative_combination(g, Eigen::Vector2d(1.0, 2.0), &coef));
  CHECK(coef(1) == doctest::Approx(2.0));
  CHECK_FALSE(nonnegative_combination(g, Eigen::Vector2d(1.0, -2.0)));
}

TEST_CASE("sdp: min trace with a fixed corner") {
  SemidefiniteProgram sdp;
  sdp.gram_dim = 2;
  sdp.eq_gram = {Eigen::Matrix2d{{1, 0}, {0, 0}}};
  sdp.eq_rhs = Eigen::VectorXd::Ones(1);
  sdp.objective_gram = Eigen::Matrix2d::Identity();
  const SdpSolution s = solve_sdp(sdp);
  REQUIRE(s.status == SdpStatus::optimal);
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(testutil::max_abs(s.gram - Eigen::Matrix2d{{1, 0}, {0, 0}}) <= 1e-6);
  CHECK(testutil::min_eig(s.gram) >= -1e-8);
}

TEST_CASE("sdp: e^4 + 1 is a sum of squares") {
  // Basis (1, e, e^2); coefficient matching for 1 + 0 e + 0 e^2 + 0 e^3 + e^4.
  SemidefiniteProgram sdp;
  sdp.gram_dim = 3;
  const auto unit = [](int i, int j) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(i, j) += 0.5;
    m(j, i) += 0.5;
    return Eigen::MatrixXd(m);
  };
  sdp.eq_gram = {unit(0, 0), 2 * unit(0, 1), 2 * unit(0, 2) + unit(1, 1), 2 * unit(1, 2), unit(2, 2)};
  sdp.eq_rhs = (Eigen::VectorXd(5) << 1, 0, 0, 0, 1).finished();
  sdp.objective_gram = Eigen::Matrix3d::Zero();
  const SdpSolution s = solve_sdp(sdp);
  REQUIRE(s.status == SdpStatus::optimal);
  CHECK(testutil::min_eig(s.gram) >= -1e-8);
  CHECK(s.equality_residual <= 1e-7);
}

TEST_CASE("sdp: infeasible corner") {
  SemidefiniteProgram sdp;
  sdp.gram_dim = 2;
  sdp.eq_gram = {Eigen::Matrix2d{{1, 0}, {0, 0}}};
  sdp.eq_rhs = -Eigen::VectorXd::Ones(1);
  sdp.objective_gram = Eigen::Matrix2d::Identity();
  const SdpSolution s = solve_sdp(sdp);
  CHECK(s.status == SdpStatus::infeasible);
}

TEST_CASE("sdp: min <C,X> over the spectraplex is the smallest eigenvalue") {
  PhiloxStream rng(8, 0, 0);
  for (int k = 0; k < 30; ++k) {
    const int n = 2 + k % 4;
    const Eigen::MatrixXd c = testutil::random_sym(rng, n).matrix();
    SemidefiniteProgram sdp;
    sdp.gram_dim = n;
    sdp.eq_gram = {Eigen::MatrixXd::Identity(n, n)};
    sdp.eq_rhs = Eigen::VectorXd::Ones(1);
    sdp.objective_gram = c;
    const SdpSolution s = solve_sdp(sdp);
    REQUIRE(s.status == SdpStatus::optimal);
    const double want = testutil::min_eig(c);
    // Weak duality: no primal feasible point beats the dual bound lambda_min.
    CHECK(s.value >= want - 1e-8);
    CHECK(s.value <= want + 1e-6);
    CHECK(testutil::min_eig(s.gram) >= -1e-8);
    CHECK(s.equality_residual <= 1e-7);
  }
}

TEST_CASE("lmi: largest off-diagonal keeping [[1,y],[y,1]] PSD") {
  LmiProgram lmi;
  lmi.objective = -Eigen::VectorXd::Ones(1);
  lmi.constant = Eigen::Matrix2d::Identity();
  lmi.coefficients = {Eigen::Matrix2d{{0, 1}, {1, 0}}};
  const LmiSolution s = solve_lmi(lmi);
  REQUIRE(s.status == SdpStatus::optimal);
  CHECK(s.y(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(testutil::min_eig(s.slack) >= -1e-8);
}

TEST_CASE("sdp: deterministic") {
  SemidefiniteProgram sdp;
  sdp.gram_dim = 3;
  sdp.eq_gram = {Eigen::MatrixXd::Identity(3, 3)};
  sdp.eq_rhs = Eigen::VectorXd::Ones(1);
  sdp.objective_gram = Eigen::Matrix3d{{1, 0.2, 0}, {0.2, -1, 0.3}, {0, 0.3, 0.5}};
  const SdpSolution a = solve_sdp(sdp), b = solve_sdp(sdp);
  CHECK(a.gram == b.gram);
}
