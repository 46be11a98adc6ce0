#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bekf/cone_frames.hpp"
#include "bekf/polynomial.hpp"
#include "bekf/sdp.hpp"
#include "bekf/sym_matrix.hpp"
#include "bekf/system_model.hpp"

namespace bekf {

/// (Q, q) such that for every error e, with z = x_tilde - e,
///   [f(x~) - f(z)]' P e + e' P [f(x~) - f(z)] + Tr{g(z)' P g(z)} - e'Qe - q <= 0.
struct Certificate {
  int p_index = 0;
  SymMatrix q_matrix;
  double q_scalar = 0.0;
  Eigen::VectorXd anchor;
};

/// Left side of the certificate inequality without the -e'Qe - q part,
/// multiplied through by clearing = m(z)^power, as a polynomial in e.
struct ErrorPolynomial {
  Polynomial cleared;
  Polynomial clearing;
  int clearing_power = 0;
};

class CertificateInfeasible : public std::runtime_error {
 public:
  CertificateInfeasible(int p_index, SdpStatus status, const std::string& what)
      : std::runtime_error(what), p_index_(p_index), status_(status) {}
  int p_index() const { return p_index_; }
  SdpStatus status() const { return status_; }

 private:
  int p_index_;
  SdpStatus status_;
};

ErrorPolynomial error_polynomial(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p);

Certificate certify_linear(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SymMatrix& p, int p_index = 0);

struct SosOptions {
  /// Degree of the Gram basis; 0 picks ceil(deg / 2) of the target polynomial.
  int half_degree = 0;
  /// The objective uses Sigma~ + regularization * (1 + Tr Sigma~) * I so the
  /// optimum stays unique when Sigma~ is singular.
  double regularization = 1e-9;
  SdpOptions sdp{};
};

/// Shares the x~-dependent polynomial expansion and the Gram parametrization
/// across all P at one linearization point.
class SosCertifier {
 public:
  SosCertifier(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SosOptions& options = {});

  /// Throws CertificateInfeasible when no SOS certificate of the configured
  /// degree exists or the solver fails.
  Certificate certify(const SymMatrix& p, const SymMatrix& sigma_tilde, int p_index = 0) const;

  int gram_dim() const { return static_cast<int>(basis_.size()); }
  int half_degree() const { return half_degree_; }

 private:
  Eigen::VectorXd dense(const Polynomial& p) const;

  int dim_;
  Eigen::VectorXd anchor_;
  SosOptions options_;
  int half_degree_ = 0;
  int quad_degree_ = 0;
  std::vector<Monomial> monomials_;
  std::vector<Monomial> basis_;
  // Per (i, j): coefficients of clearing * [f_i(x~) - f_i(z)] * e_j and of clearing * (g g')_ij(z).
  std::vector<Eigen::VectorXd> drift_terms_;
  std::vector<Eigen::VectorXd> noise_terms_;
  // Per upper-triangular (k, l): coefficients of clearing * d(e'Qe)/dQ_kl; last entry is clearing.
  std::vector<Eigen::VectorXd> free_terms_;
  // Gram parametrization X = sum_a t_a R_a + sum_k w_k N_k.
  std::vector<Eigen::MatrixXd> particular_;
  std::vector<Eigen::MatrixXd> null_dirs_;
};

Certificate certify_sos(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& sigma_tilde,
                        const SymMatrix& p, const SosOptions& options = {}, int p_index = 0);

enum class CertificateMethod { automatic, linear, sos };

/// One certificate per frame member at x_tilde.
std::vector<Certificate> certify_frame(const SystemModel& model, const Eigen::VectorXd& x_tilde,
                                       const SymMatrix& sigma_tilde, const PFrame& frame,
                                       CertificateMethod method = CertificateMethod::automatic,
                                       const SosOptions& options = {});

/// Cleared inequality left side at one error value, from the model callables.
double certificate_slack(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p,
                         const Certificate& cert, const Eigen::VectorXd& e);

struct ValidationOptions {
  long n_samples = 100000;
  double radius = 20.0;
  std::uint64_t seed = 0x5eedc0deULL;
};

/// Maximum slack over e = 0, axis and cube-vertex probes and n_samples points
/// uniform in the radius ball. Sample k is a pure function of (seed, k), so the
/// OpenMP and serial versions return the same value.
double validate_certificate(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p,
                            const Certificate& cert, const ValidationOptions& options = {});
double validate_certificate_serial(const SystemModel& model, const Eigen::VectorXd& x_tilde, const SymMatrix& p,
                                   const Certificate& cert, const ValidationOptions& options = {});

}  // namespace bekf
