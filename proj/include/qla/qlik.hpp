#pragma once

#include <cstdint>
#include <string>

#include "qla/model.hpp"
#include "qla/simulate.hpp"

namespace qla {

struct Observations {
  int n = 0;
  double T = 0.0;
  double h = 0.0;  // T/n
  MatrixXd x;      // (n+1) x d
  MatrixXd y;      // (n+1) x m
  enum class Provenance { simulated, ingested } provenance = Provenance::simulated;
  std::uint64_t seed = 0;       // when simulated
  std::string source;           // when ingested

  static Observations from_path(const SamplePath& path);
  void validate() const;
};

struct QlikEval {
  double value = 0.0;
  VectorXd grad;
  MatrixXd hess;  // symmetric
  VectorXd theta;
};

// Quasi-log-likelihood
//   H_n(theta) = -(n m / 2) log(2 pi h)
//     - 1/2 sum_k { log det S(X_{t_{k-1}}, theta) + h^{-1} S^{-1}[(dY_k)^{x2}] }.
double h_n(const Observations& obs, const ModelSpec& model, const VectorXd& theta);

// Analytic gradient and Hessian via the chain rule on S.
QlikEval h_n_grad_hess(const Observations& obs, const ModelSpec& model, const VectorXd& theta);

// log Z_n(u) = H_n(theta* + u/sqrt(n)) - H_n(theta*); Z_n = exp of that.
double log_z_field(const Observations& obs, const ModelSpec& model, const VectorXd& theta_star,
                   const VectorXd& u);
double z_field(const Observations& obs, const ModelSpec& model, const VectorXd& theta_star,
               const VectorXd& u);

// Y_n(theta) = (H_n(theta) - H_n(theta*)) / n.
double y_field(const Observations& obs, const ModelSpec& model, const VectorXd& theta_star,
               const VectorXd& theta);

// Limit field Y(theta), left-Riemann sum along the covariate path:
//   -(2T)^{-1} int_0^T { log(det S(X_t,th)/det S(X_t,th*)) + Tr(S^{-1}(th) S(th*) - I_m) } dt.
// xpath holds n+1 grid rows; the first n are the left endpoints.
double y_limit(const MatrixXd& xpath, const ModelSpec& model, const VectorXd& theta_star,
               const VectorXd& theta);

// Asymptotic information Gamma(theta*), left-Riemann sum of
//   (2T)^{-1} Tr((d_i S) S^{-1} (d_j S) S^{-1}) along the path. May be singular
// for unidentifiable models; callers decide whether that is fatal.
MatrixXd gamma_info(const MatrixXd& xpath, const ModelSpec& model, const VectorXd& theta_star);

// Observed information Gamma_n(theta) = -(1/n) d^2_theta H_n(theta).
MatrixXd gamma_n(const Observations& obs, const ModelSpec& model, const VectorXd& theta);

}  // namespace qla
