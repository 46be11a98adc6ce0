#include <doctest.h>

#include "bekf/certificates.hpp"
#include "bekf/polynomial.hpp"
#include "bekf/simulation.hpp"
#include "test_util.hpp"

using namespace bekf;
using testutil::max_abs;

namespace {

// [f(x~) - f(z)]' P e + e' P [f(x~) - f(z)] + Tr{g(z)' P g(z)}, z = x~ - e, from the callables.
double direct_lhs(const SystemModel& m, const Eigen::VectorXd& xt, const SymMatrix& p, const Eigen::VectorXd& e) {
  const Eigen::VectorXd z = xt - e;
  const Eigen::VectorXd df = m.drift(xt) - m.drift(z);
  const Eigen::MatrixXd g = m.diffusion(z);
  return 2.0 * df.dot(p.matrix() * e) + (g.transpose() * p.matrix() * g).trace();
}

double example_m(const Eigen::VectorXd& z) { return (1.0 + z.squaredNorm()) / 25.0; }

Eigen::VectorXd in_ball(PhiloxStream& rng, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double th = 2.0 * M_PI * rng.uniform();
  return Eigen::Vector2d(r * std::cos(th), r * std::sin(th));
}

SystemModel scalar_linear(double a, double b) {
  return make_linear_model(Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, b),
                           Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1));
}

}  // namespace

TEST_CASE("error polynomial of a linear model is the Lyapunov quadratic form") {
  PhiloxStream rng(31, 0, 0);
  const Eigen::MatrixXd a = testutil::gaussian(rng, 2, 2), b = testutil::gaussian(rng, 2, 3);
  const SystemModel m = make_linear_model(a, b, Eigen::RowVector2d(1, 0), Eigen::MatrixXd::Ones(1, 1));
  const SymMatrix p = testutil::random_sym(rng, 2);
  const ErrorPolynomial ep = error_polynomial(m, Eigen::Vector2d(0.3, -2.0), p);
  const Eigen::MatrixXd quad = a.transpose() * p.matrix() + p.matrix() * a;
  CHECK(ep.cleared.degree() <= 2);
  CHECK(ep.cleared.coefficient({2, 0}) == doctest::Approx(quad(0, 0)).epsilon(1e-12));
  CHECK(ep.cleared.coefficient({0, 2}) == doctest::Approx(quad(1, 1)).epsilon(1e-12));
  CHECK(ep.cleared.coefficient({1, 1}) == doctest::Approx(2.0 * quad(0, 1)).epsilon(1e-12));
  CHECK(std::abs(ep.cleared.coefficient({1, 0})) <= 1e-12);
  CHECK(ep.cleared.coefficient({0, 0}) == doctest::Approx((b.transpose() * p.matrix() * b).trace()).epsilon(1e-12));
}

TEST_CASE("error polynomial at e = 0 is the noise term times the clearing factor") {
  const SystemModel m = example_model();
  const PFrame f = build_p_frame(2);
  const Eigen::Vector2d xt(1.5, -0.7);
  for (const SymMatrix& p : f.members) {
    const ErrorPolynomial ep = error_polynomial(m, xt, p);
    const Eigen::MatrixXd g = m.diffusion(xt);
    const double want = (g.transpose() * p.matrix() * g).trace() * std::pow(example_m(xt), ep.clearing_power);
    CHECK(ep.cleared.evaluate(Eigen::Vector2d::Zero()) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("example error polynomial at (8,0) matches an interpolation expansion") {
  const SystemModel m = example_model();
  const SymMatrix p = build_p_frame(2).members[0];
  const Eigen::Vector2d xt(8.0, 0.0);
  const ErrorPolynomial ep = error_polynomial(m, xt, p);
  CHECK(ep.cleared.degree() == 4);
  REQUIRE(ep.clearing_power == 1);

  // Least squares fit of all monomials up to degree 4 to sampled values of the
  // cleared expression.
  const auto mons = monomials_up_to(2, 4);
  PhiloxStream rng(32, 0, 0);
  const int samples = 60;
  Eigen::MatrixXd design(samples, mons.size());
  Eigen::VectorXd values(samples);
  for (int k = 0; k < samples; ++k) {
    const Eigen::Vector2d e(2.0 * rng.normal(), 2.0 * rng.normal());
    for (size_t j = 0; j < mons.size(); ++j) design(k, j) = std::pow(e(0), mons[j][0]) * std::pow(e(1), mons[j][1]);
    values(k) = direct_lhs(m, xt, p, e) * example_m(xt - e);
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(values);
  for (size_t j = 0; j < mons.size(); ++j) {
    CAPTURE(mons[j][0]);
    CAPTURE(mons[j][1]);
    CHECK(std::abs(ep.cleared.coefficient(mons[j]) - coef(j)) <= 1e-8 * (1.0 + std::abs(coef(j))));
  }
}

TEST_CASE("error polynomial evaluates like the defining expression") {
  const SystemModel m = example_model();
  const PFrame f = build_p_frame(2);
  PhiloxStream rng(33, 0, 0);
  for (int k = 0; k < 1000; ++k) {
    const Eigen::VectorXd xt = in_ball(rng, 10.0);
    const Eigen::VectorXd e = in_ball(rng, 20.0);
    const SymMatrix& p = f.members[k % 4];
    const ErrorPolynomial ep = error_polynomial(m, xt, p);
    const double want = direct_lhs(m, xt, p, e) * std::pow(example_m(xt - e), ep.clearing_power);
    const double got = ep.cleared.evaluate(e);
    REQUIRE(std::abs(got - want) <= 1e-9 * (1.0 + std::abs(want)));
    REQUIRE(ep.clearing.evaluate(e) == doctest::Approx(std::pow(example_m(xt - e), ep.clearing_power)).epsilon(1e-12));
  }
}

TEST_CASE("linear closed form") {
  const Certificate c = certify_linear(Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Ones(1, 1),
                                       SymMatrix(Eigen::MatrixXd::Ones(1, 1)));
  CHECK(c.q_matrix(0, 0) == -2.0);
  CHECK(c.q_scalar == 1.0);
  const Certificate z = certify_linear(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2), SymMatrix::identity(2));
  CHECK(max_abs(z.q_matrix.matrix()) == 0.0);
  CHECK(z.q_scalar == 0.0);

  PhiloxStream rng(34, 0, 0);
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXd a = testutil::gaussian(rng, 2, 2), b = testutil::gaussian(rng, 2, 2);
    const SymMatrix p = testutil::random_sym(rng, 2);
    const SystemModel m = make_linear_model(a, b, Eigen::RowVector2d(1, 0), Eigen::MatrixXd::Ones(1, 1));
    const Certificate c2 = certify_linear(a, b, p);
    ValidationOptions vo;
    vo.n_samples = 100000;
    CHECK(validate_certificate(m, Eigen::Vector2d(rng.normal(), rng.normal()), p, c2, vo) <= 1e-12 * (1 + 400 * max_abs(c2.q_matrix.matrix())));
  }
}

TEST_CASE("SOS certificates of linear models reproduce the closed form") {
  PhiloxStream rng(35, 0, 0);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd a = testutil::gaussian(rng, 2, 2), b = testutil::gaussian(rng, 2, 1 + k % 2);
    const SystemModel m = make_linear_model(a, b, Eigen::RowVector2d(1, 0), Eigen::MatrixXd::Ones(1, 1));
    const SymMatrix p = testutil::random_sym(rng, 2);
    const SymMatrix sigma = testutil::random_psd(rng, 2) + 0.1 * SymMatrix::identity(2);
    const Certificate exact = certify_linear(a, b, p);
    const Certificate sos = certify_sos(m, Eigen::Vector2d(rng.normal(), rng.normal()), sigma, p);
    CHECK(max_abs(exact.q_matrix.matrix() - sos.q_matrix.matrix()) <= 1e-6);
    CHECK(std::abs(exact.q_scalar - sos.q_scalar) <= 1e-6);
  }
}

TEST_CASE("example certificates pass the sampling validator") {
  const SystemModel m = example_model();
  const PFrame f = build_p_frame(2);
  PhiloxStream rng(36, 0, 0);
  ValidationOptions vo;
  vo.n_samples = 20000;
  std::vector<Eigen::VectorXd> points{Eigen::Vector2d(8.0, 0.0)};
  for (int k = 0; k < 3; ++k) points.push_back(in_ball(rng, 10.0));
  for (const Eigen::VectorXd& xt : points) {
    const auto certs = certify_frame(m, xt, 0.5 * SymMatrix::identity(2), f);
    REQUIRE(certs.size() == 4);
    for (size_t i = 0; i < certs.size(); ++i) {
      CHECK(certs[i].p_index == static_cast<int>(i));
      CHECK(certs[i].anchor == xt);
      CHECK(validate_certificate(m, xt, f.members[i], certs[i], vo) <= 1e-6);
    }
  }
}

TEST_CASE("finite escape drift has no certificate at any degree") {
  Polynomial x = Polynomial::variable(1, 0);
  const SystemModel m = make_rational_model(make_rational_drift({Polynomial::constant(1, 1.0) + x * x},
                                                                Polynomial::constant(1, 1.0), 0),
                                            {Polynomial::constant(1, 1.0)}, 1, Eigen::MatrixXd::Ones(1, 1),
                                            Eigen::MatrixXd::Ones(1, 1));
  for (int deg = 0; deg <= 3; ++deg) {
    SosOptions opt;
    opt.half_degree = deg;
    CHECK_THROWS_AS(certify_sos(m, Eigen::VectorXd::Constant(1, 0.5), SymMatrix::identity(1),
                                SymMatrix::identity(1), opt),
                    CertificateInfeasible);
  }
}

TEST_CASE("corrupted and inflated certificates") {
  const SystemModel lin = scalar_linear(-1.0, 1.0);
  const SymMatrix p(Eigen::MatrixXd::Ones(1, 1));
  Certificate c = certify_linear(Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Ones(1, 1), p);
  ValidationOptions vo;
  vo.n_samples = 1000;
  CHECK(validate_certificate(lin, Eigen::VectorXd::Zero(1), p, c, vo) <= 1e-12);
  c.q_scalar -= 1.0;
  CHECK(validate_certificate(lin, Eigen::VectorXd::Zero(1), p, c, vo) >= 1.0 - 1e-12);

  const SystemModel m = example_model();
  const Eigen::Vector2d xt(8.0, 0.0);
  const PFrame f = build_p_frame(2);
  Certificate e = certify_sos(m, xt, 0.5 * SymMatrix::identity(2), f.members[1], {}, 1);
  const double base = validate_certificate(m, xt, f.members[1], e, vo);
  Certificate inflated = e;
  inflated.q_scalar += 0.5;
  CHECK(validate_certificate(m, xt, f.members[1], inflated, vo) <= base);
  CHECK(certificate_slack(m, xt, f.members[1], inflated, Eigen::Vector2d::Zero()) ==
        doctest::Approx(certificate_slack(m, xt, f.members[1], e, Eigen::Vector2d::Zero()) - 0.5 * example_m(xt)));
  e.q_scalar -= 1.0;
  CHECK(validate_certificate(m, xt, f.members[1], e, vo) >= 0.99 * example_m(xt));
}

TEST_CASE("certificate slack matches the defining inequality") {
  const SystemModel m = example_model();
  const Eigen::Vector2d xt(-3.0, 2.0);
  const SymMatrix p = build_p_frame(2).members[2];
  const Certificate c = certify_sos(m, xt, SymMatrix::identity(2), p, {}, 2);
  PhiloxStream rng(37, 0, 0);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd e = in_ball(rng, 5.0);
    const double want = (direct_lhs(m, xt, p, e) - e.dot(c.q_matrix.matrix() * e) - c.q_scalar) * example_m(xt - e);
    CHECK(certificate_slack(m, xt, p, c, e) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("parallel and serial validation agree exactly") {
  const SystemModel m = example_model();
  const Eigen::Vector2d xt(2.0, 1.0);
  const SymMatrix p = build_p_frame(2).members[3];
  const Certificate c = certify_sos(m, xt, SymMatrix::identity(2), p, {}, 3);
  ValidationOptions vo;
  vo.n_samples = 5000;
  CHECK(validate_certificate(m, xt, p, c, vo) == validate_certificate_serial(m, xt, p, c, vo));
}

TEST_CASE("SOS certifier reuses its parametrization across P") {
  const SystemModel m = example_model();
  const SosCertifier cert(m, Eigen::Vector2d(8.0, 0.0));
  CHECK(cert.half_degree() == 2);
  CHECK(cert.gram_dim() == 6);
  const PFrame f = build_p_frame(2);
  const Certificate a = cert.certify(f.members[0], 0.5 * SymMatrix::identity(2), 0);
  const Certificate b = certify_sos(m, Eigen::Vector2d(8.0, 0.0), 0.5 * SymMatrix::identity(2), f.members[0]);
  CHECK(a.q_matrix == b.q_matrix);
  CHECK(a.q_scalar == b.q_scalar);
}
