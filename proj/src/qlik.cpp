#include "qla/qlik.hpp"

#include <cmath>

namespace qla {

namespace {

constexpr double kTwoPi = 2.0 * 3.141592653589793238462643383279502884;

bool scalar_fast_path(const ModelSpec& model) { return model.m == 1; }

}  // namespace

Observations Observations::from_path(const SamplePath& path) {
  Observations obs;
  obs.n = path.n;
  obs.T = path.T;
  obs.h = path.T / path.n;
  obs.x = path.x;
  obs.y = path.y;
  obs.provenance = Provenance::simulated;
  obs.seed = path.seed;
  return obs;
}

void Observations::validate() const {
  if (n < 1) throw ConfigError("Observations: n must be >= 1");
  if (x.rows() != n + 1 || y.rows() != n + 1)
    throw ConfigError("Observations: row count does not match n+1");
  if (std::abs(h * n - T) > 1e-12 * std::max(1.0, std::abs(T)))
    throw ConfigError("Observations: h*n != T");
  if (!x.allFinite() || !y.allFinite()) throw ConfigError("Observations: non-finite rows");
}

double h_n(const Observations& obs, const ModelSpec& model, const VectorXd& theta) {
  if (!model.in_closure(theta, 1e-12))
    throw DomainError("h_n: theta outside the closure of the parameter box");
  const int n = obs.n;
  const double h = obs.h;
  double acc = 0.0;
  if (scalar_fast_path(model)) {
    VectorXd xk(model.d);
    for (int k = 1; k <= n; ++k) {
      xk = obs.x.row(k - 1).transpose();
      const double sig = model.sigma(xk, theta)(0, 0);
      const double s = sig * sig;
      if (!(s > 0.0) || !std::isfinite(s))
        throw NonSPDError("h_n: S not positive at k=" + std::to_string(k));
      const double dy = obs.y(k, 0) - obs.y(k - 1, 0);
      acc += std::log(s) + dy * dy / (h * s);
    }
  } else {
    VectorXd xk(model.d), dy(model.m);
    for (int k = 1; k <= n; ++k) {
      xk = obs.x.row(k - 1).transpose();
      CholS c;
      try {
        c = s_chol_logdet_inv(model, xk, theta);
      } catch (const NonSPDError&) {
        throw NonSPDError("h_n: S not SPD at k=" + std::to_string(k));
      }
      dy = (obs.y.row(k) - obs.y.row(k - 1)).transpose();
      const VectorXd z = c.lower.triangularView<Eigen::Lower>().solve(dy);
      acc += c.logdet + z.squaredNorm() / h;
    }
  }
  return -0.5 * n * model.m * std::log(kTwoPi * h) - 0.5 * acc;
}

QlikEval h_n_grad_hess(const Observations& obs, const ModelSpec& model, const VectorXd& theta) {
  if (!model.in_closure(theta, 1e-12))
    throw DomainError("h_n_grad_hess: theta outside the closure of the parameter box");
  const int n = obs.n;
  const int p = model.p;
  const double h = obs.h;

  QlikEval out;
  out.theta = theta;
  out.grad = VectorXd::Zero(p);
  out.hess = MatrixXd::Zero(p, p);
  double value_acc = 0.0;

  VectorXd xk(model.d), dy(model.m);
  for (int k = 1; k <= n; ++k) {
    xk = obs.x.row(k - 1).transpose();
    CholS c;
    try {
      c = s_chol_logdet_inv(model, xk, theta);
    } catch (const NonSPDError&) {
      throw NonSPDError("h_n_grad_hess: S not SPD at k=" + std::to_string(k));
    }
    dy = (obs.y.row(k) - obs.y.row(k - 1)).transpose();
    const auto ds = dtheta_s(model, xk, theta, 1);
    const auto d2s = dtheta_s(model, xk, theta, 2);
    const MatrixXd& P = c.inverse;
    const VectorXd Pdy = P * dy;

    value_acc += c.logdet + dy.dot(Pdy) / h;

    for (int i = 0; i < p; ++i) {
      const MatrixXd PdSi = P * ds[i];
      // d/d theta_i { log det S } = Tr(P dS_i)
      // d/d theta_i { dy' P dy }  = -dy' P dS_i P dy
      out.grad(i) += -0.5 * (PdSi.trace() - Pdy.dot(ds[i] * Pdy) / h);
      for (int j = i; j < p; ++j) {
        const MatrixXd PdSj = P * ds[j];
        const double tr_term = -(PdSj * PdSi).trace() + (P * d2s[i * p + j]).trace();
        const double quad_term =
            (Pdy.dot(ds[j] * P * ds[i] * Pdy) + Pdy.dot(ds[i] * P * ds[j] * Pdy) -
             Pdy.dot(d2s[i * p + j] * Pdy)) /
            h;
        const double contrib = -0.5 * (tr_term + quad_term);
        out.hess(i, j) += contrib;
        if (j != i) out.hess(j, i) += contrib;
      }
    }
  }
  out.value = -0.5 * n * model.m * std::log(kTwoPi * h) - 0.5 * value_acc;
  out.hess = 0.5 * (out.hess + out.hess.transpose().eval());
  return out;
}

double log_z_field(const Observations& obs, const ModelSpec& model, const VectorXd& theta_star,
                   const VectorXd& u) {
  const VectorXd theta = theta_star + u / std::sqrt(static_cast<double>(obs.n));
  if (!model.in_closure(theta, 1e-12))
    throw DomainError("z_field: u outside U_n (theta* + u/sqrt(n) leaves the box)");
  if (u.isZero(0.0)) return 0.0;  // Z_n(0) = 1 exactly
  return h_n(obs, model, theta) - h_n(obs, model, theta_star);
}

double z_field(const Observations& obs, const ModelSpec& model, const VectorXd& theta_star,
               const VectorXd& u) {
  return std::exp(log_z_field(obs, model, theta_star, u));
}

double y_field(const Observations& obs, const ModelSpec& model, const VectorXd& theta_star,
               const VectorXd& theta) {
  return (h_n(obs, model, theta) - h_n(obs, model, theta_star)) / obs.n;
}

double y_limit(const MatrixXd& xpath, const ModelSpec& model, const VectorXd& theta_star,
               const VectorXd& theta) {
  const int n = static_cast<int>(xpath.rows()) - 1;
  double acc = 0.0;
  if (scalar_fast_path(model) && model.r == 1) {
    VectorXd xk(model.d);
    for (int k = 0; k < n; ++k) {
      xk = xpath.row(k).transpose();
      const double sig = model.sigma(xk, theta)(0, 0);
      const double sig0 = model.sigma(xk, theta_star)(0, 0);
      const double s = sig * sig, s0 = sig0 * sig0;
      if (!(s > 0.0) || !(s0 > 0.0)) throw NonSPDError("y_limit: S not positive");
      acc += std::log(s / s0) + s0 / s - 1.0;
    }
  } else {
    VectorXd xk(model.d);
    for (int k = 0; k < n; ++k) {
      xk = xpath.row(k).transpose();
      const CholS c = s_chol_logdet_inv(model, xk, theta);
      const CholS c0 = s_chol_logdet_inv(model, xk, theta_star);
      const MatrixXd ratio = c.inverse * (c0.lower * c0.lower.transpose());
      acc += (c.logdet - c0.logdet) + ratio.trace() - model.m;
    }
  }
  // The T/n grid weight and the 1/(2T) prefactor reduce to 1/(2n).
  return -acc / (2.0 * n);
}

MatrixXd gamma_info(const MatrixXd& xpath, const ModelSpec& model, const VectorXd& theta_star) {
  const int n = static_cast<int>(xpath.rows()) - 1;
  const int p = model.p;
  MatrixXd gamma = MatrixXd::Zero(p, p);
  VectorXd xk(model.d);
  for (int k = 0; k < n; ++k) {
    xk = xpath.row(k).transpose();
    const CholS c = s_chol_logdet_inv(model, xk, theta_star);
    const auto ds = dtheta_s(model, xk, theta_star, 1);
    std::vector<MatrixXd> A(p);
    for (int i = 0; i < p; ++i) A[i] = ds[i] * c.inverse;
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j) {
        const double v = (A[i] * A[j]).trace();
        gamma(i, j) += v;
        if (j != i) gamma(j, i) += v;
      }
  }
  gamma /= 2.0 * n;
  return 0.5 * (gamma + gamma.transpose().eval());
}

MatrixXd gamma_n(const Observations& obs, const ModelSpec& model, const VectorXd& theta) {
  const QlikEval e = h_n_grad_hess(obs, model, theta);
  return -e.hess / static_cast<double>(obs.n);
}

}  // namespace qla
