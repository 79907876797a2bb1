#pragma once

#include <optional>
#include <vector>

#include "qla/qlik.hpp"

namespace qla {

struct Prior {
  enum class Kind { uniform, user_table } kind = Kind::uniform;
  // For user_table (p = 1): strictly positive density values on an equispaced
  // grid over [lo, hi]; evaluated by linear interpolation.
  std::vector<double> table;

  static Prior uniform() { return Prior{}; }
  static Prior user_table(std::vector<double> values);
  double density(const ModelSpec& model, const VectorXd& theta) const;
};

enum class EstimatorKind { qmle, bayes, qmle_bayes_init };

struct EstimationResult {
  EstimatorKind kind = EstimatorKind::qmle;
  VectorXd theta_hat;
  std::optional<double> objective;  // H_n at theta_hat; absent for bayes
  MatrixXd gamma_n;                 // observed information at theta_hat
  std::optional<VectorXd> std_error;     // sqrt(n) (theta_hat - theta*)
  std::optional<VectorXd> standardized;  // Gamma_hat^{1/2} sqrt(n) (theta_hat - theta*)
  bool converged = true;
  long evals = 0;
};

struct QmleOpts {
  bool multistart = true;
  int multistart_points = 17;  // equispaced per axis
  int max_iter = 200;
  double armijo_c = 1e-4;
  double grad_tol = 1e-8;  // scaled by max(1, |H_n|)
  double step_tol = 1e-12;
};

struct BayesOpts {
  // Simpson grid points per axis (forced odd); defaults depend on p.
  int grid_points = 0;
  bool refine = true;        // re-center on the 99.99% posterior mass interval
  double mass_tail = 5e-5;   // per side
};

// Projected Newton maximization of H_n with analytic gradient/Hessian, grid
// multistart realizing the global sup over Theta (Eq.-(2)-style estimator).
EstimationResult qmle(const Observations& obs, const ModelSpec& model, const VectorXd& init,
                      const QmleOpts& opts = {});

// Posterior mean under quadratic loss, composite Simpson quadrature with
// log-shift stabilization and one mass-based grid refinement.
EstimationResult bayes(const Observations& obs, const ModelSpec& model, const Prior& prior,
                       const BayesOpts& opts = {});

// bayes followed by qmle(init = posterior mean).
EstimationResult qmle_with_bayes_init(const Observations& obs, const ModelSpec& model,
                                      const Prior& prior, const QmleOpts& qopts = {},
                                      const BayesOpts& bopts = {});

// Fills std_error and standardized from the observed path:
//   sqrt(n)(theta_hat - theta*) and Gamma_hat^{1/2} sqrt(n)(theta_hat - theta*).
void standardize(EstimationResult& result, const Observations& obs, const ModelSpec& model,
                 const VectorXd& theta_star);

}  // namespace qla
