#include "qla/simulate.hpp"

#include <cmath>
#include <limits>

#include "qla/rng.hpp"

namespace qla {

namespace {

double sigma_x_deriv(const ModelSpec& model, const VectorXd& x, const VectorXd& theta) {
  if (model.dsigma_dx) return model.dsigma_dx(x, theta, 0)(0, 0);
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x(0)));
  VectorXd xp = x, xm = x;
  xp(0) += h;
  xm(0) -= h;
  return (model.sigma(xp, theta)(0, 0) - model.sigma(xm, theta)(0, 0)) / (2.0 * h);
}

void check_finite(const VectorXd& v, int step) {
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || std::abs(v(i)) > 1e12)
      throw NumericBlowup("simulate_path: state exceeded 1e12 at fine step " + std::to_string(step));
  }
}

}  // namespace

SamplePath simulate_path(const ModelSpec& model, int n, double T, const VectorXd& theta_star,
                         std::uint64_t seed, Scheme scheme, int substeps, const VectorXd& y0) {
  if (n < 1) throw ConfigError("simulate_path: n must be >= 1");
  if (substeps < 1) throw ConfigError("simulate_path: substeps must be >= 1");
  if (!model.in_closure(theta_star))
    throw DomainError("simulate_path: theta* outside the parameter box");
  const bool scalar = (model.d == 1 && model.m == 1 && model.r == 1);
  if (scheme == Scheme::milstein && !scalar)
    throw UnsupportedScheme("Milstein scheme requires d = m = r = 1");

  const bool joint_x = static_cast<bool>(model.x_drift) || static_cast<bool>(model.x_diff);

  SamplePath path;
  path.n = n;
  path.T = T;
  path.seed = seed;
  path.scheme = scheme;
  path.substeps = substeps;
  path.t.resize(n + 1);
  for (int k = 0; k <= n; ++k) path.t(k) = static_cast<double>(k) * T / n;
  path.x.resize(n + 1, model.d);
  path.y.resize(n + 1, model.m);

  VectorXd y = (y0.size() == model.m) ? y0 : VectorXd::Zero(model.m);
  VectorXd x = joint_x ? VectorXd::Zero(model.d) : VectorXd(y.head(model.d));
  path.x.row(0) = x.transpose();
  path.y.row(0) = y.transpose();

  GaussianStream gs(seed, 0);
  GaussianStream gs_x(seed, 1);  // independent driver for joint X dynamics

  const long total = static_cast<long>(n) * substeps;
  const double delta = T / static_cast<double>(total);
  const double sqrt_delta = std::sqrt(delta);

  VectorXd dw(model.r);
  for (long j = 0; j < total; ++j) {
    const double t = static_cast<double>(j) * delta;
    for (int i = 0; i < model.r; ++i) dw(i) = gs.normal() * sqrt_delta;

    const MatrixXd sig = model.sigma(x, theta_star);
    VectorXd ynew = y + model.drift(t, x, y) * delta + sig * dw;
    if (scheme == Scheme::milstein) {
      const double sp = sigma_x_deriv(model, x, theta_star);
      ynew(0) += 0.5 * sig(0, 0) * sp * (dw(0) * dw(0) - delta);
    }

    if (joint_x) {
      VectorXd xnew = x;
      if (model.x_drift) xnew += model.x_drift(t, x) * delta;
      if (model.x_diff) {
        VectorXd dwx(model.x_diff(x).cols());
        for (int i = 0; i < dwx.size(); ++i) dwx(i) = gs_x.normal() * sqrt_delta;
        xnew += model.x_diff(x) * dwx;
      }
      x = xnew;
    }
    y = ynew;
    if (!joint_x) x = y.head(model.d);
    check_finite(y, static_cast<int>(j));

    if ((j + 1) % substeps == 0) {
      const long k = (j + 1) / substeps;
      path.x.row(k) = x.transpose();
      path.y.row(k) = y.transpose();
    }
  }
  return path;
}

}  // namespace qla
