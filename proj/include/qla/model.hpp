#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qla/errors.hpp"

namespace qla {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Parametric diffusion model dY = b dt + sigma(X, theta) dw on [0, T], with
// the covariate X observed alongside Y (X = Y for all built-in models).
// Theta lives in an axis-aligned box; sigma must extend continuously to its
// closure. All function suppliers must be pure.
struct ModelSpec {
  std::string name;
  int p = 1;  // parameter dimension
  int d = 1;  // covariate dimension
  int m = 1;  // observation dimension
  int r = 1;  // driving Wiener dimension

  VectorXd theta_lo, theta_hi;

  // b_t(t, x, y) in R^m. Treated as a nuisance by the estimators.
  std::function<VectorXd(double, const VectorXd&, const VectorXd&)> drift;

  // sigma(x, theta) in R^{m x r}.
  std::function<MatrixXd(const VectorXd&, const VectorXd&)> sigma;

  // Optional analytic derivative suppliers. When absent, central finite
  // differences are used.
  std::function<MatrixXd(const VectorXd&, const VectorXd&, int)> dsigma_dtheta;        // d sigma / d theta_i
  std::function<MatrixXd(const VectorXd&, const VectorXd&, int, int)> d2sigma_dtheta;  // d^2 sigma / d theta_i d theta_j
  std::function<MatrixXd(const VectorXd&, const VectorXd&, int)> dsigma_dx;            // d sigma / d x_k (Milstein)

  // Optional joint dynamics for X when X != Y.
  std::function<VectorXd(double, const VectorXd&)> x_drift;
  std::function<MatrixXd(const VectorXd&)> x_diff;

  bool in_closure(const VectorXd& theta, double tol = 0.0) const;
  bool in_interior(const VectorXd& theta, double margin) const;
  VectorXd clamp_to_margined_box(const VectorXd& theta, double mu_rel = 1e-9) const;
  double theta_diameter() const { return (theta_hi - theta_lo).norm(); }

  void validate() const;  // throws ConfigError on a bad spec
};

// Cholesky factorization bundle for S = sigma sigma^T.
struct CholS {
  MatrixXd lower;    // L with L L^T = S
  double logdet;     // 2 sum log L_ii
  MatrixXd inverse;  // S^{-1} reconstructed from L
};

// S(x, theta) = sigma sigma^T, symmetrized as (A + A^T)/2.
MatrixXd s_matrix(const ModelSpec& model, const VectorXd& x, const VectorXd& theta);

CholS s_chol_logdet_inv(const ModelSpec& model, const VectorXd& x, const VectorXd& theta);
CholS chol_logdet_inv(const MatrixXd& s);  // same kernel for a precomputed S

// Theta-derivatives of S. order 1: p matrices dS/dtheta_i; order 2: p*p
// matrices d2S/dtheta_i dtheta_j in row-major (i*p + j) order.
std::vector<MatrixXd> dtheta_s(const ModelSpec& model, const VectorXd& x, const VectorXd& theta, int order);

// Built-in model registry.
ModelSpec make_model(const std::string& name);
std::vector<std::string> registered_models();

// Scalar conveniences for the common d = m = r = 1 case.
inline VectorXd scalar_vec(double v) {
  VectorXd x(1);
  x(0) = v;
  return x;
}

}  // namespace qla
