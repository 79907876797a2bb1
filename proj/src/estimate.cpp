#include "qla/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qla {

Prior Prior::user_table(std::vector<double> values) {
  if (values.size() < 2) throw ConfigError("prior table needs at least 2 values");
  for (double v : values)
    if (!(v > 0.0)) throw ConfigError("prior table must be strictly positive");
  Prior p;
  p.kind = Kind::user_table;
  p.table = std::move(values);
  return p;
}

double Prior::density(const ModelSpec& model, const VectorXd& theta) const {
  if (kind == Kind::uniform) return 1.0;  // normalizing constant cancels
  if (model.p != 1) throw UnsupportedDimension("tabulated prior supports p = 1 only");
  const double lo = model.theta_lo(0), hi = model.theta_hi(0);
  const double t = std::clamp((theta(0) - lo) / (hi - lo), 0.0, 1.0);
  const double pos = t * (table.size() - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(pos), table.size() - 2);
  const double frac = pos - static_cast<double>(i);
  return table[i] * (1.0 - frac) + table[i + 1] * frac;
}

namespace {

VectorXd projected_gradient(const ModelSpec& model, const VectorXd& theta, const VectorXd& grad,
                            double mu_rel = 1e-9) {
  VectorXd g = grad;
  for (int i = 0; i < model.p; ++i) {
    const double mu = mu_rel * (model.theta_hi(i) - model.theta_lo(i));
    if (theta(i) <= model.theta_lo(i) + mu && g(i) < 0.0) g(i) = 0.0;
    if (theta(i) >= model.theta_hi(i) - mu && g(i) > 0.0) g(i) = 0.0;
  }
  return g;
}

// Ascent direction from the Hessian of H_n, made usable by clamping the
// eigenvalues of -hess to a positive floor.
VectorXd newton_direction(const MatrixXd& hess, const VectorXd& grad) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(-hess);
  VectorXd ev = es.eigenvalues();
  const double floor_ev = std::max(1e-10, 1e-12 * ev.cwiseAbs().maxCoeff());
  for (int i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor_ev);
  return es.eigenvectors() * (es.eigenvectors().transpose() * grad).cwiseQuotient(ev);
}

struct LocalResult {
  VectorXd theta;
  QlikEval eval;
  bool converged = false;
  long evals = 0;
};

LocalResult newton_ascent(const Observations& obs, const ModelSpec& model, const VectorXd& init,
                          const QmleOpts& opts) {
  LocalResult res;
  VectorXd theta = model.clamp_to_margined_box(init);
  QlikEval eval = h_n_grad_hess(obs, model, theta);
  ++res.evals;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const VectorXd pg = projected_gradient(model, theta, eval.grad);
    if (pg.lpNorm<Eigen::Infinity>() < opts.grad_tol * std::max(1.0, std::abs(eval.value))) {
      res.converged = true;
      break;
    }
    const VectorXd dir = newton_direction(eval.hess, pg);
    double alpha = 1.0;
    bool stepped = false;
    while (true) {
      const VectorXd cand = model.clamp_to_margined_box(theta + alpha * dir);
      const VectorXd actual_step = cand - theta;
      if (actual_step.lpNorm<Eigen::Infinity>() < opts.step_tol) break;
      const double f_cand = h_n(obs, model, cand);
      ++res.evals;
      if (f_cand >= eval.value + opts.armijo_c * eval.grad.dot(actual_step)) {
        theta = cand;
        eval = h_n_grad_hess(obs, model, theta);
        ++res.evals;
        stepped = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!stepped) {
      res.converged = true;  // step shrank below tolerance
      break;
    }
  }
  res.theta = theta;
  res.eval = eval;
  return res;
}

// Interior equispaced verification grid realizing the global sup over Theta.
std::vector<VectorXd> multistart_grid(const ModelSpec& model, int points_per_axis) {
  std::vector<VectorXd> grid;
  const int p = model.p;
  auto axis_value = [&](int axis, int idx) {
    return model.theta_lo(axis) +
           (idx + 1) * (model.theta_hi(axis) - model.theta_lo(axis)) / (points_per_axis + 1);
  };
  if (p <= 3) {
    std::vector<int> idx(p, 0);
    while (true) {
      VectorXd th(p);
      for (int a = 0; a < p; ++a) th(a) = axis_value(a, idx[a]);
      grid.push_back(th);
      int a = 0;
      while (a < p && ++idx[a] == points_per_axis) idx[a++] = 0;
      if (a == p) break;
    }
  } else {
    // axis lines through the box center
    VectorXd center = 0.5 * (model.theta_lo + model.theta_hi);
    for (int a = 0; a < p; ++a)
      for (int i = 0; i < points_per_axis; ++i) {
        VectorXd th = center;
        th(a) = axis_value(a, i);
        grid.push_back(th);
      }
  }
  return grid;
}

}  // namespace

EstimationResult qmle(const Observations& obs, const ModelSpec& model, const VectorXd& init,
                      const QmleOpts& opts) {
  if (!model.in_closure(init, 1e-12)) throw DomainError("qmle: init outside the parameter box");
  obs.validate();

  LocalResult best = newton_ascent(obs, model, init, opts);
  long evals = best.evals;

  if (opts.multistart) {
    const auto grid = multistart_grid(model, opts.multistart_points);
    for (int restart = 0; restart < 10; ++restart) {
      VectorXd challenger;
      double challenger_value = best.eval.value + 1e-9;
      for (const auto& th : grid) {
        const double v = h_n(obs, model, th);
        ++evals;
        if (v > challenger_value) {
          challenger_value = v;
          challenger = th;
        }
      }
      if (challenger.size() == 0) break;
      LocalResult alt = newton_ascent(obs, model, challenger, opts);
      evals += alt.evals;
      if (alt.eval.value > best.eval.value) best = std::move(alt);
    }
  }

  EstimationResult out;
  out.kind = EstimatorKind::qmle;
  out.theta_hat = best.theta;
  out.objective = best.eval.value;
  out.gamma_n = -best.eval.hess / static_cast<double>(obs.n);
  out.converged = best.converged;
  out.evals = evals;
  return out;
}

namespace {

struct SimpsonPass {
  VectorXd theta_tilde;
  double total_weight = 0.0;
  // 1 - 2*mass_tail central mass interval per axis, widened by one cell
  std::vector<std::pair<double, double>> mass_interval;
  std::vector<int> mass_ilo, mass_ihi;  // the same interval as grid indices
  // raw field for restricted re-integration
  std::vector<double> logw;
  std::vector<std::pair<double, double>> box;
  int g = 0;
  double log_max = 0.0;
};

struct SimpsonIntegral {
  VectorXd num;     // integral of theta * w, in units of exp(log_max)
  double den = 0.0; // integral of w, same units
};

// Tensor-product composite Simpson over the index sub-box [lo_a, hi_a] per
// axis. hi - lo must be even on every axis.
SimpsonIntegral integrate_range(const SimpsonPass& pass, const std::vector<int>& lo,
                                const std::vector<int>& hi) {
  const int p = static_cast<int>(pass.box.size());
  const int g = pass.g;
  double scale = 1.0;
  for (int a = 0; a < p; ++a)
    scale *= (pass.box[a].second - pass.box[a].first) / (g - 1) / 3.0;

  auto coeff_at = [&](int a, int i) {
    if (i == lo[a] || i == hi[a]) return 1.0;
    return ((i - lo[a]) % 2 == 1) ? 4.0 : 2.0;
  };

  long total = 1;
  std::vector<long> extent(p);
  for (int a = 0; a < p; ++a) {
    extent[a] = hi[a] - lo[a] + 1;
    total *= extent[a];
  }

  SimpsonIntegral out;
  out.num = VectorXd::Zero(p);
  std::vector<int> idx(p);
  VectorXd th(p);
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    double coeff = 1.0;
    long src = 0, stride = 1;
    for (int a = 0; a < p; ++a) {
      idx[a] = lo[a] + static_cast<int>(rem % extent[a]);
      rem /= extent[a];
      coeff *= coeff_at(a, idx[a]);
      src += idx[a] * stride;
      stride *= g;
      th(a) = pass.box[a].first + idx[a] * (pass.box[a].second - pass.box[a].first) / (g - 1);
    }
    const double w = std::exp(pass.logw[src] - pass.log_max);
    out.num += (scale * coeff * w) * th;
    out.den += scale * coeff * w;
  }
  return out;
}

SimpsonPass simpson_pass(const Observations& obs, const ModelSpec& model, const Prior& prior,
                         const std::vector<std::pair<double, double>>& box, int g, double mass_tail,
                         long& evals) {
  const int p = model.p;
  long total = 1;
  for (int a = 0; a < p; ++a) total *= g;

  std::vector<double> logw(total);
  double log_max = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(p, 0);
  VectorXd th(p);
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    for (int a = 0; a < p; ++a) {
      idx[a] = static_cast<int>(rem % g);
      rem /= g;
    }
    for (int a = 0; a < p; ++a)
      th(a) = box[a].first + idx[a] * (box[a].second - box[a].first) / (g - 1);
    const double pi = prior.density(model, th);
    logw[flat] = h_n(obs, model, th) + std::log(pi);
    ++evals;
    log_max = std::max(log_max, logw[flat]);
  }
  if (!std::isfinite(log_max)) throw DegeneratePosterior("bayes: posterior weights degenerate");

  auto simpson_coeff = [&](int i) {
    if (i == 0 || i == g - 1) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };

  SimpsonPass out;
  VectorXd num = VectorXd::Zero(p);
  double den = 0.0;
  // per-axis marginal (plain weights, for the mass interval)
  std::vector<std::vector<double>> marginal(p, std::vector<double>(g, 0.0));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    double coeff = 1.0;
    for (int a = 0; a < p; ++a) {
      idx[a] = static_cast<int>(rem % g);
      rem /= g;
      coeff *= simpson_coeff(idx[a]);
    }
    const double w = std::exp(logw[flat] - log_max);
    for (int a = 0; a < p; ++a) {
      th(a) = box[a].first + idx[a] * (box[a].second - box[a].first) / (g - 1);
      marginal[a][idx[a]] += w;
    }
    num += coeff * w * th;
    den += coeff * w;
  }
  if (!(den > 0.0) || !std::isfinite(den))
    throw DegeneratePosterior("bayes: total posterior weight underflowed");
  out.theta_tilde = num / den;
  out.total_weight = den;
  out.logw = std::move(logw);
  out.box = box;
  out.g = g;
  out.log_max = log_max;

  out.mass_interval.resize(p);
  out.mass_ilo.resize(p);
  out.mass_ihi.resize(p);
  for (int a = 0; a < p; ++a) {
    double tot = 0.0;
    for (double w : marginal[a]) tot += w;
    double cum = 0.0;
    int ilo = 0, ihi = g - 1;
    for (int i = 0; i < g; ++i) {
      cum += marginal[a][i];
      if (cum < mass_tail * tot) ilo = i;
      if (cum <= (1.0 - mass_tail) * tot) ihi = std::min(i + 1, g - 1);
    }
    ilo = std::max(0, ilo - 1);
    ihi = std::min(g - 1, ihi + 1);
    while (ihi - ilo < 4) {  // keep a usable Simpson panel
      ilo = std::max(0, ilo - 1);
      ihi = std::min(g - 1, ihi + 1);
      if (ilo == 0 && ihi == g - 1) break;
    }
    if ((ihi - ilo) % 2 == 1) {  // Simpson sub-ranges need an even cell count
      if (ihi < g - 1)
        ++ihi;
      else
        --ilo;
    }
    const double step = (box[a].second - box[a].first) / (g - 1);
    out.mass_interval[a] = {box[a].first + ilo * step, box[a].first + ihi * step};
    out.mass_ilo[a] = ilo;
    out.mass_ihi[a] = ihi;
  }
  return out;
}

}  // namespace

EstimationResult bayes(const Observations& obs, const ModelSpec& model, const Prior& prior,
                       const BayesOpts& opts) {
  obs.validate();
  const int p = model.p;
  if (p > 3) throw UnsupportedDimension("bayes: p > 3 is not supported");
  int g = opts.grid_points;
  if (g <= 0) g = (p == 1) ? 1025 : (p == 2 ? 129 : 33);
  if (g % 2 == 0) ++g;
  if (g < 5) g = 5;

  std::vector<std::pair<double, double>> box(p);
  for (int a = 0; a < p; ++a) box[a] = {model.theta_lo(a), model.theta_hi(a)};

  long evals = 0;
  SimpsonPass pass1 = simpson_pass(obs, model, prior, box, g, opts.mass_tail, evals);
  VectorXd theta_tilde = pass1.theta_tilde;
  if (opts.refine) {
    bool narrower = false;
    for (int a = 0; a < p; ++a) {
      const double full = box[a].second - box[a].first;
      const double part = pass1.mass_interval[a].second - pass1.mass_interval[a].first;
      if (part < 0.99 * full) narrower = true;
    }
    if (narrower) {
      // Second pass: a fine grid over the mass interval. The tiny tail mass
      // outside it is kept from the first coarse pass so the estimator is the
      // full-domain posterior mean, not a truncated one.
      const SimpsonPass pass2 =
          simpson_pass(obs, model, prior, pass1.mass_interval, g, opts.mass_tail, evals);
      const std::vector<int> full_lo(p, 0), full_hi(p, g - 1);
      const SimpsonIntegral whole = integrate_range(pass1, full_lo, full_hi);
      const SimpsonIntegral inner = integrate_range(pass1, pass1.mass_ilo, pass1.mass_ihi);
      const SimpsonIntegral fine = integrate_range(pass2, full_lo, full_hi);

      const double shift = std::max(pass1.log_max, pass2.log_max);
      const double s1 = std::exp(pass1.log_max - shift);
      const double s2 = std::exp(pass2.log_max - shift);
      double tail_den = (whole.den - inner.den) * s1;
      VectorXd tail_num = (whole.num - inner.num) * s1;
      if (!(tail_den > 0.0)) {  // round-off can leave a negligible negative tail
        tail_den = 0.0;
        tail_num.setZero();
      }
      const double den = fine.den * s2 + tail_den;
      if (!(den > 0.0) || !std::isfinite(den))
        throw DegeneratePosterior("bayes: posterior weight underflowed in refinement");
      theta_tilde = (fine.num * s2 + tail_num) / den;
    }
  }

  EstimationResult out;
  out.kind = EstimatorKind::bayes;
  out.theta_hat = theta_tilde;
  out.gamma_n = gamma_n(obs, model, model.clamp_to_margined_box(out.theta_hat));
  out.converged = true;
  out.evals = evals;
  return out;
}

EstimationResult qmle_with_bayes_init(const Observations& obs, const ModelSpec& model,
                                      const Prior& prior, const QmleOpts& qopts,
                                      const BayesOpts& bopts) {
  const EstimationResult b = bayes(obs, model, prior, bopts);
  EstimationResult out = qmle(obs, model, model.clamp_to_margined_box(b.theta_hat), qopts);
  out.kind = EstimatorKind::qmle_bayes_init;
  out.evals += b.evals;
  return out;
}

void standardize(EstimationResult& result, const Observations& obs, const ModelSpec& model,
                 const VectorXd& theta_star) {
  const double sn = std::sqrt(static_cast<double>(obs.n));
  VectorXd err = sn * (result.theta_hat - theta_star);
  result.std_error = err;

  const MatrixXd gamma = gamma_info(obs.x, model, theta_star);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gamma);
  if (es.eigenvalues().minCoeff() < 1e-12)
    throw SingularInformation("standardize: information matrix nearly singular");
  const MatrixXd root =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  result.standardized = root * err;
}

}  // namespace qla
