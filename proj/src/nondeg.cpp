#include "qla/nondeg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qla/rng.hpp"
#include "qla/simulate.hpp"

namespace qla {

double q_divergence(const ModelSpec& model, const VectorXd& x, const VectorXd& theta,
                    const VectorXd& theta_star, double* clamp) {
  if (theta.size() == theta_star.size() && theta == theta_star) {
    // Q(., theta, theta) = 0 identically; skip the round-off of evaluating it.
    if (clamp) *clamp = 0.0;
    return 0.0;
  }
  const CholS c = s_chol_logdet_inv(model, x, theta);
  const CholS c0 = s_chol_logdet_inv(model, x, theta_star);
  const MatrixXd s0 = c0.lower * c0.lower.transpose();
  const double q = (c.inverse * s0).trace() - model.m - (c0.logdet - c.logdet);
  if (clamp) *clamp = std::min(q, 0.0);
  return std::max(q, 0.0);
}

namespace {

double golden_min(const std::function<double(double)>& f, double a, double b, int iters = 60) {
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

Chi0Result chi0(const MatrixXd& xpath, const ModelSpec& model, const VectorXd& theta_star,
                const Chi0Opts& opts) {
  const int p = model.p;
  const double delta = opts.delta_rel * model.theta_diameter();
  Chi0Result out;

  auto ratio1 = [&](double th) {
    const VectorXd theta = scalar_vec(th);
    const double dist2 = (theta - theta_star).squaredNorm();
    if (dist2 < delta * delta) return std::numeric_limits<double>::infinity();
    return -y_limit(xpath, model, theta_star, theta) / dist2;
  };

  if (p == 1) {
    const int g = opts.grid_points;
    const double lo = model.theta_lo(0), hi = model.theta_hi(0);
    const double cell = (hi - lo) / (g - 1);
    int argmin = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g; ++i) {
      const double v = ratio1(lo + i * cell);
      if (v < best) {
        best = v;
        argmin = i;
      }
    }
    double refined = best;
    double refined_at = lo + argmin * cell;
    if (argmin >= 0) {
      const double a = lo + std::max(0, argmin - 1) * cell;
      const double b = lo + std::min(g - 1, argmin + 1) * cell;
      const double xmin = golden_min(ratio1, a, b);
      const double v = ratio1(xmin);
      if (v < refined) {
        refined = v;
        refined_at = xmin;
      }
    }
    out.grid_min = refined;
    out.grid_too_coarse = std::abs(refined_at - (lo + argmin * cell)) > cell;
  } else if (p == 2) {
    const int g = std::min(opts.grid_points, 129);
    double best = std::numeric_limits<double>::infinity();
    VectorXd th(2);
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        th(0) = model.theta_lo(0) + i * (model.theta_hi(0) - model.theta_lo(0)) / (g - 1);
        th(1) = model.theta_lo(1) + j * (model.theta_hi(1) - model.theta_lo(1)) / (g - 1);
        const double dist2 = (th - theta_star).squaredNorm();
        if (dist2 < delta * delta) continue;
        best = std::min(best, -y_limit(xpath, model, theta_star, th) / dist2);
      }
    out.grid_min = best;
  } else {
    throw UnsupportedDimension("chi0: p > 2 is not supported");
  }

  // Near theta* the ratio has a removable singularity; its limit along any
  // direction is bounded below by the smallest eigenvalue of Gamma(theta*).
  const MatrixXd gamma = gamma_info(xpath, model, theta_star);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gamma);
  out.quad_form_min = es.eigenvalues().minCoeff();

  out.value = std::min(out.grid_min, out.quad_form_min);
  return out;
}

NondegReport h2_tail_curve(const ModelSpec& model, const VectorXd& theta_star, int n, double T,
                           const std::vector<double>& r_grid, long replicates, std::uint64_t seed,
                           const Chi0Opts& chi0_opts, int substeps) {
  NondegReport report;
  report.r_grid = r_grid;
  report.replicates = replicates;
  report.chi0_samples.reserve(replicates);

  const Scheme scheme = (model.d == 1 && model.m == 1 && model.r == 1) ? Scheme::milstein : Scheme::euler;
  for (long j = 0; j < replicates; ++j) {
    const SamplePath path =
        simulate_path(model, n, T, theta_star, derive_stream_seed(seed, static_cast<std::uint64_t>(j)),
                      scheme, substeps);
    report.chi0_samples.push_back(chi0(path.x, model, theta_star, chi0_opts).value);
  }

  report.tail_prob.resize(r_grid.size(), 0.0);
  report.tail_ci.resize(r_grid.size());
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    long hits = 0;
    for (double c : report.chi0_samples)
      if (c <= 1.0 / r_grid[i]) ++hits;
    report.tail_prob[i] = replicates > 0 ? static_cast<double>(hits) / replicates : 0.0;
    report.tail_ci[i] = wilson_interval(hits, replicates);
  }
  report.tail_prob_isotonic = isotonic_nonincreasing(report.tail_prob);

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (report.tail_prob[i] > 0.0 && report.tail_prob[i] < 1.0) {
      lx.push_back(std::log(r_grid[i]));
      ly.push_back(std::log(report.tail_prob[i]));
    }
  }
  if (lx.size() >= 2) {
    report.fitted_exponent = -linear_fit(lx, ly).first;  // P ~ r^{-L}
    report.exponent_fitted = true;
  }
  return report;
}

PldiReport pldi_tail(const ModelSpec& model, const VectorXd& theta_star, int n, double T,
                     const std::vector<double>& r_grid, int u_grid_points, long replicates,
                     std::uint64_t seed, int substeps) {
  if (model.p != 1) throw UnsupportedDimension("pldi_tail: p = 1 only");
  PldiReport report;
  report.r_grid = r_grid;
  report.replicates = replicates;
  report.frequency.assign(r_grid.size(), 0.0);
  report.empty_region.assign(r_grid.size(), false);

  const double sn = std::sqrt(static_cast<double>(n));
  const double u_lo = sn * (model.theta_lo(0) - theta_star(0));
  const double u_hi = sn * (model.theta_hi(0) - theta_star(0));
  std::vector<double> u_abs_sorted(u_grid_points);
  std::vector<double> u_by_abs(u_grid_points);
  {
    std::vector<double> u(u_grid_points);
    for (int i = 0; i < u_grid_points; ++i)
      u[i] = u_lo + i * (u_hi - u_lo) / (u_grid_points - 1);
    std::sort(u.begin(), u.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    u_by_abs = u;
    for (int i = 0; i < u_grid_points; ++i) u_abs_sorted[i] = std::abs(u[i]);
  }
  // Deterministic emptiness per r (the grid is fixed across replicates).
  std::vector<int> first_idx(r_grid.size());
  for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
    const auto it = std::lower_bound(u_abs_sorted.begin(), u_abs_sorted.end(), r_grid[ri]);
    first_idx[ri] = static_cast<int>(it - u_abs_sorted.begin());
    if (first_idx[ri] >= u_grid_points) report.empty_region[ri] = true;
  }

  std::vector<long> hits(r_grid.size(), 0);
  for (long j = 0; j < replicates; ++j) {
    const SamplePath path =
        simulate_path(model, n, T, theta_star, derive_stream_seed(seed, static_cast<std::uint64_t>(j)),
                      Scheme::milstein, substeps);
    const Observations obs = Observations::from_path(path);
    const double h_star = h_n(obs, model, theta_star);

    std::vector<double> logz(u_grid_points);
    VectorXd th(1);
    for (int i = 0; i < u_grid_points; ++i) {
      th(0) = theta_star(0) + u_by_abs[i] / sn;
      th = model.clamp_to_margined_box(th, 0.0);
      logz[i] = h_n(obs, model, th) - h_star;
    }
    // suffix max over |u| >= threshold
    std::vector<double> suffix_max(u_grid_points + 1, -std::numeric_limits<double>::infinity());
    for (int i = u_grid_points - 1; i >= 0; --i)
      suffix_max[i] = std::max(suffix_max[i + 1], logz[i]);

    for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
      if (report.empty_region[ri]) continue;
      if (suffix_max[first_idx[ri]] >= -r_grid[ri]) ++hits[ri];
    }
  }
  for (std::size_t ri = 0; ri < r_grid.size(); ++ri)
    if (!report.empty_region[ri] && replicates > 0)
      report.frequency[ri] = static_cast<double>(hits[ri]) / replicates;
  return report;
}

double separation_inner_inf(const std::vector<double>& coeffs, double eps, double x) {
  std::vector<double> a, b;  // magnitude ranges of the active terms
  double xj = 1.0;
  for (double c : coeffs) {
    const double mag = std::abs(c) * xj;
    if (mag > 0.0) {
      a.push_back(mag * eps);
      b.push_back(mag / eps);
    }
    xj *= x;
  }
  const std::size_t k = a.size();
  if (k == 0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask & (std::size_t{1} << j)) {
        lo += a[j];
        hi += b[j];
      } else {
        lo -= b[j];
        hi -= a[j];
      }
    }
    const double dist = (lo <= 0.0 && 0.0 <= hi) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
    best = std::min(best, dist);
    if (best == 0.0) break;
  }
  return best;
}

namespace {

double eval_max_inf(const std::vector<double>& c, const std::vector<double>& alphas, double eps,
                    double n) {
  double best = 0.0;
  for (double a : alphas)
    best = std::max(best, separation_inner_inf(c, eps, std::pow(n, -a)));
  return best;
}

// 1-dimensional null space of the J x (J+1) Vandermonde rows at the given
// points, l1-normalized to delta.
std::vector<double> vandermonde_null(const std::vector<double>& points, double delta) {
  const int J = static_cast<int>(points.size());
  MatrixXd A(J, J + 1);
  for (int i = 0; i < J; ++i) {
    double xj = 1.0;
    for (int j = 0; j <= J; ++j) {
      A(i, j) = xj;
      xj *= points[i];
    }
  }
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
  VectorXd ns = svd.matrixV().col(J);
  const double l1 = ns.lpNorm<1>();
  std::vector<double> c(J + 1);
  for (int j = 0; j <= J; ++j) c[j] = delta * ns(j) / l1;
  return c;
}

}  // namespace

SeparationReport separation_check(int J, const std::vector<double>& alphas, double delta,
                                  double eps, const std::vector<double>& n_list, long samples,
                                  std::uint64_t seed) {
  if (static_cast<int>(alphas.size()) != J + 1)
    throw InvalidAlphas("separation_check: need J+1 alphas");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw InvalidAlphas("separation_check: alphas must be positive");
    if (i > 0 && !(alphas[i] > alphas[i - 1]))
      throw InvalidAlphas("separation_check: alphas must be strictly increasing");
  }
  if (!(delta > 0.0)) throw ConfigError("separation_check: delta must be positive");
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("separation_check: eps must be in (0,1]");

  double n_max = 1.0, a_max = 0.0;
  for (double n : n_list) n_max = std::max(n_max, n);
  for (double a : alphas) a_max = std::max(a_max, a);
  const double min_exp = -(a_max * std::log10(n_max) + 2.0);

  // Random candidates (shared across all n so the fitted exponent is stable):
  // log-uniform magnitudes reach down to the adversarial n^{-alpha} scales.
  GaussianStream rng(seed, 0);
  std::vector<std::vector<double>> candidates;
  candidates.reserve(samples);
  for (long s = 0; s < samples; ++s) {
    std::vector<double> c(J + 1);
    double l1 = 0.0;
    for (int j = 0; j <= J; ++j) {
      const double mag = std::pow(10.0, min_exp * rng.uniform());
      c[j] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * mag;
      l1 += mag;
    }
    const double target = (s % 2 == 0) ? delta : delta * (1.0 + rng.uniform());  // shell + interior
    for (double& v : c) v *= target / l1;
    candidates.push_back(std::move(c));
  }

  SeparationReport report;
  for (double n : n_list) {
    double minimum = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) minimum = std::min(minimum, eval_max_inf(c, alphas, eps, n));
    if (J >= 1) {
      // Null-space candidates killing the polynomial at each J-subset of the
      // evaluation points n^{-alpha_i}.
      std::vector<double> points(alphas.size());
      for (std::size_t i = 0; i < alphas.size(); ++i) points[i] = std::pow(n, -alphas[i]);
      for (std::size_t drop = 0; drop < points.size(); ++drop) {
        std::vector<double> subset;
        for (std::size_t i = 0; i < points.size(); ++i)
          if (i != drop) subset.push_back(points[i]);
        minimum = std::min(minimum, eval_max_inf(vandermonde_null(subset, delta), alphas, eps, n));
      }
    }
    report.n_list.push_back(n);
    report.min_value.push_back(minimum);
    report.implied_L.push_back(minimum > 0.0 ? -std::log(minimum) / std::log(n)
                                             : std::numeric_limits<double>::infinity());
  }
  return report;
}

SupportReport supporting_bound_check(const SupportingFunctionSpec& spec, const ModelSpec& model,
                                     const VectorXd& theta_star, int x_points, int theta_points) {
  if (model.p != 1 || model.d != 1)
    throw UnsupportedDimension("supporting_bound_check: scalar models only");
  if (theta_star.size() != model.p || !model.in_closure(theta_star))
    throw ConfigError("supporting_bound_check: theta_star must lie in the parameter box");
  if (x_points < 2 || theta_points < 2)
    throw ConfigError("supporting_bound_check: need at least a 2x2 grid");
  SupportReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  VectorXd x(1), th(1);
  for (int i = 0; i < x_points; ++i) {
    x(0) = spec.x_lo + i * (spec.x_hi - spec.x_lo) / (x_points - 1);
    for (int j = 0; j < theta_points; ++j) {
      th(0) = model.theta_lo(0) + j * (model.theta_hi(0) - model.theta_lo(0)) / (theta_points - 1);
      const double dist2 = (th - theta_star).squaredNorm();
      if (dist2 < 1e-18) continue;
      const double lhs = q_divergence(model, x, th, theta_star) / dist2;
      const double rhs = spec.scale * std::pow(std::abs(spec.f(x(0), th(0))), spec.rho);
      const double slack = lhs - rhs;
      if (slack < report.min_slack) {
        report.min_slack = slack;
        report.argmin_x = x(0);
        report.argmin_theta = th(0);
      }
      if (slack < 0.0) ++report.violations;
    }
  }
  return report;
}

}  // namespace qla
