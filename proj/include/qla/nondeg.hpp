#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qla/qlik.hpp"
#include "qla/stats.hpp"

namespace qla {

// Kullback-type divergence between volatility matrices,
//   Q = Tr(S(x,theta)^{-1} S(x,theta*) - I) - log det(S(x,theta)^{-1} S(x,theta*)).
// Analytically >= 0; the returned value is clamped at 0 and the worst negative
// round-off excursion is reported through `clamp` when provided.
double q_divergence(const ModelSpec& model, const VectorXd& x, const VectorXd& theta,
                    const VectorXd& theta_star, double* clamp = nullptr);

struct Chi0Opts {
  int grid_points = 513;     // per axis
  double delta_rel = 1e-3;   // near-theta* split, relative to diam(Theta)
};

struct Chi0Result {
  double value = 0.0;           // min of the two regimes
  double grid_min = 0.0;        // regime (a): refined grid minimum of (-Y)/|th-th*|^2
  double quad_form_min = 0.0;   // regime (b): lambda_min(Gamma(theta*))
  bool grid_too_coarse = false; // refinement moved the argmin by more than one cell
};

// chi_0 = inf_{theta != theta*} (-Y(theta)) / |theta - theta*|^2 along a path.
Chi0Result chi0(const MatrixXd& xpath, const ModelSpec& model, const VectorXd& theta_star,
                const Chi0Opts& opts = {});

struct NondegReport {
  std::vector<double> chi0_samples;          // one per replicate
  std::vector<double> r_grid;
  std::vector<double> tail_prob;             // raw P_hat[chi0 <= 1/r]
  std::vector<double> tail_prob_isotonic;    // nonincreasing correction of MC noise
  std::vector<WilsonInterval> tail_ci;
  double fitted_exponent = 0.0;              // slope of log P_hat vs log r (L in [H2])
  bool exponent_fitted = false;
  long replicates = 0;
};

// Monte Carlo tail curve for condition [H2]: P[chi_0 <= 1/r] per r.
NondegReport h2_tail_curve(const ModelSpec& model, const VectorXd& theta_star, int n, double T,
                           const std::vector<double>& r_grid, long replicates, std::uint64_t seed,
                           const Chi0Opts& chi0_opts = {}, int substeps = 10);

struct PldiReport {
  std::vector<double> r_grid;
  std::vector<double> frequency;    // P_hat[sup_{u in V_n(r)} Z_n(u) >= e^{-r}]
  std::vector<bool> empty_region;   // V_n(r) had no grid point
  long replicates = 0;
};

// Tail frequencies for the polynomial-type large deviation inequality:
// per replicate, sup of Z_n over the u-grid restricted to V_n(r) = {|u| >= r}.
PldiReport pldi_tail(const ModelSpec& model, const VectorXd& theta_star, int n, double T,
                     const std::vector<double>& r_grid, int u_grid_points, long replicates,
                     std::uint64_t seed, int substeps = 10);

struct SeparationReport {
  std::vector<double> n_list;
  std::vector<double> min_value;  // empirical min over c of max_i inf_u |p(c*u, n^{-a_i})|
  std::vector<double> implied_L;  // -log(min)/log(n)
};

// Numeric check of the polynomial separation bound: coefficient vectors c are
// sampled on and above the |c|_1 = delta shell (log-uniform magnitudes plus
// Vandermonde null-space candidates); the inner infimum over u in U_eps is
// computed exactly by sign-pattern interval arithmetic.
SeparationReport separation_check(int J, const std::vector<double>& alphas, double delta,
                                  double eps, const std::vector<double>& n_list, long samples,
                                  std::uint64_t seed = 20240501);

// Exact inner infimum, exposed for tests:
//   inf over u (eps <= |u_j| <= 1/eps) of |sum_j c_j u_j x^j|.
double separation_inner_inf(const std::vector<double>& coeffs, double eps, double x);

struct SupportingFunctionSpec {
  std::function<double(double, double)> f;  // f(x, theta), scalar x and theta
  double rho = 1.0;                         // exponent, > 0
  double scale = 1.0;                       // c in Q|th-th*|^{-2} >= c |f|^rho
  double x_lo = -1.0, x_hi = 1.0;           // interval U
};

struct SupportReport {
  double min_slack = 0.0;
  double argmin_x = 0.0, argmin_theta = 0.0;
  long violations = 0;
};

// Grid verification of the [A3](i)/[R]-style lower bound
//   Q(x,theta,theta*) |theta-theta*|^{-2} >= c |f(x,theta)|^rho
// over U x closure(Theta) excluding |theta - theta*| < 1e-9.
SupportReport supporting_bound_check(const SupportingFunctionSpec& spec, const ModelSpec& model,
                                     const VectorXd& theta_star, int x_points, int theta_points);

}  // namespace qla
