#include "qla/model.hpp"

#include <cmath>
#include <limits>

namespace qla {

namespace {

double fd_step(double scale) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, std::abs(scale));
}

double fd_step2(double scale) {
  static const double h0 = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  return h0 * std::max(1.0, std::abs(scale));
}

}  // namespace

bool ModelSpec::in_closure(const VectorXd& theta, double tol) const {
  if (theta.size() != p) return false;
  for (int i = 0; i < p; ++i) {
    const double slack = tol * (theta_hi(i) - theta_lo(i));
    if (theta(i) < theta_lo(i) - slack || theta(i) > theta_hi(i) + slack) return false;
  }
  return true;
}

bool ModelSpec::in_interior(const VectorXd& theta, double margin) const {
  if (theta.size() != p) return false;
  for (int i = 0; i < p; ++i) {
    if (theta(i) < theta_lo(i) + margin || theta(i) > theta_hi(i) - margin) return false;
  }
  return true;
}

VectorXd ModelSpec::clamp_to_margined_box(const VectorXd& theta, double mu_rel) const {
  VectorXd out = theta;
  for (int i = 0; i < p; ++i) {
    const double mu = mu_rel * (theta_hi(i) - theta_lo(i));
    out(i) = std::min(std::max(out(i), theta_lo(i) + mu), theta_hi(i) - mu);
  }
  return out;
}

void ModelSpec::validate() const {
  if (p < 1 || d < 1 || m < 1 || r < 1) throw ConfigError("model dimensions must be positive");
  if (theta_lo.size() != p || theta_hi.size() != p)
    throw ConfigError("theta_domain size does not match p");
  for (int i = 0; i < p; ++i)
    if (!(theta_lo(i) < theta_hi(i))) throw ConfigError("theta_domain must satisfy lo < hi");
  if (!sigma) throw ConfigError("model has no sigma");
  if (!drift) throw ConfigError("model has no drift");
}

MatrixXd s_matrix(const ModelSpec& model, const VectorXd& x, const VectorXd& theta) {
  if (!model.in_closure(theta, 1e-12))
    throw DomainError("s_matrix: theta outside the closure of the parameter box");
  const MatrixXd sig = model.sigma(x, theta);
  MatrixXd s = sig * sig.transpose();
  return 0.5 * (s + s.transpose().eval());
}

CholS chol_logdet_inv(const MatrixXd& s) {
  Eigen::LLT<MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw NonSPDError("Cholesky factorization failed: S is not positive definite");
  CholS out;
  out.lower = llt.matrixL();
  out.logdet = 2.0 * out.lower.diagonal().array().log().sum();
  out.inverse = llt.solve(MatrixXd::Identity(s.rows(), s.cols()));
  return out;
}

CholS s_chol_logdet_inv(const ModelSpec& model, const VectorXd& x, const VectorXd& theta) {
  return chol_logdet_inv(s_matrix(model, x, theta));
}

std::vector<MatrixXd> dtheta_s(const ModelSpec& model, const VectorXd& x, const VectorXd& theta,
                               int order) {
  const int p = model.p;
  if (order != 1 && order != 2) throw ConfigError("dtheta_s: order must be 1 or 2");

  if (model.dsigma_dtheta) {
    const MatrixXd sig = model.sigma(x, theta);
    std::vector<MatrixXd> dsig(p);
    for (int i = 0; i < p; ++i) dsig[i] = model.dsigma_dtheta(x, theta, i);
    if (order == 1) {
      std::vector<MatrixXd> out(p);
      for (int i = 0; i < p; ++i) {
        MatrixXd ds = dsig[i] * sig.transpose() + sig * dsig[i].transpose();
        out[i] = 0.5 * (ds + ds.transpose().eval());
      }
      return out;
    }
    if (!model.d2sigma_dtheta)
      throw ConfigError("dtheta_s: order-2 requested but no second-derivative supplier");
    std::vector<MatrixXd> out(p * p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        const MatrixXd d2 = model.d2sigma_dtheta(x, theta, i, j);
        MatrixXd dds = d2 * sig.transpose() + dsig[i] * dsig[j].transpose() +
                       dsig[j] * dsig[i].transpose() + sig * d2.transpose();
        out[i * p + j] = 0.5 * (dds + dds.transpose().eval());
      }
    }
    return out;
  }

  // Central finite differences on S itself.
  auto shifted = [&](int i, double h) {
    VectorXd th = theta;
    th(i) += h;
    if (!model.in_closure(th))
      throw DomainError("dtheta_s: finite-difference step exits the parameter box");
    return s_matrix(model, x, th);
  };

  if (order == 1) {
    std::vector<MatrixXd> out(p);
    for (int i = 0; i < p; ++i) {
      const double h = fd_step(theta(i));
      out[i] = (shifted(i, h) - shifted(i, -h)) / (2.0 * h);
    }
    return out;
  }

  const MatrixXd s0 = s_matrix(model, x, theta);
  std::vector<MatrixXd> out(p * p);
  for (int i = 0; i < p; ++i) {
    const double hi = fd_step2(theta(i));
    out[i * p + i] = (shifted(i, hi) - 2.0 * s0 + shifted(i, -hi)) / (hi * hi);
    for (int j = i + 1; j < p; ++j) {
      const double hj = fd_step2(theta(j));
      auto shifted2 = [&](double a, double b) {
        VectorXd th = theta;
        th(i) += a;
        th(j) += b;
        if (!model.in_closure(th))
          throw DomainError("dtheta_s: finite-difference step exits the parameter box");
        return s_matrix(model, x, th);
      };
      MatrixXd mixed = (shifted2(hi, hj) - shifted2(hi, -hj) - shifted2(-hi, hj) + shifted2(-hi, -hj)) /
                       (4.0 * hi * hj);
      out[i * p + j] = mixed;
      out[j * p + i] = mixed;
    }
  }
  return out;
}

namespace {

// dY = Y dt + exp{theta sin^2 Y} dw,  Theta = (-pi, pi)
ModelSpec make_exp_sin2() {
  ModelSpec m;
  m.name = "exp-sin2";
  m.p = m.d = m.m = m.r = 1;
  m.theta_lo = scalar_vec(-3.141592653589793);
  m.theta_hi = scalar_vec(3.141592653589793);
  m.drift = [](double, const VectorXd&, const VectorXd& y) { return y; };
  m.sigma = [](const VectorXd& x, const VectorXd& th) {
    const double s = std::sin(x(0));
    return MatrixXd::Constant(1, 1, std::exp(th(0) * s * s));
  };
  m.dsigma_dtheta = [](const VectorXd& x, const VectorXd& th, int) {
    const double s2 = std::sin(x(0)) * std::sin(x(0));
    return MatrixXd::Constant(1, 1, s2 * std::exp(th(0) * s2));
  };
  m.d2sigma_dtheta = [](const VectorXd& x, const VectorXd& th, int, int) {
    const double s2 = std::sin(x(0)) * std::sin(x(0));
    return MatrixXd::Constant(1, 1, s2 * s2 * std::exp(th(0) * s2));
  };
  m.dsigma_dx = [](const VectorXd& x, const VectorXd& th, int) {
    const double s2 = std::sin(x(0)) * std::sin(x(0));
    return MatrixXd::Constant(1, 1, th(0) * std::sin(2.0 * x(0)) * std::exp(th(0) * s2));
  };
  return m;
}

// dY = Y dt + exp{sin(theta) sin Y - theta^2 sin^2 Y} dw,  Theta = (-pi, pi)
ModelSpec make_sin_sin() {
  ModelSpec m;
  m.name = "sin-sin";
  m.p = m.d = m.m = m.r = 1;
  m.theta_lo = scalar_vec(-3.141592653589793);
  m.theta_hi = scalar_vec(3.141592653589793);
  m.drift = [](double, const VectorXd&, const VectorXd& y) { return y; };
  auto g = [](double x, double th) {
    const double sx = std::sin(x);
    return std::sin(th) * sx - th * th * sx * sx;
  };
  m.sigma = [g](const VectorXd& x, const VectorXd& th) {
    return MatrixXd::Constant(1, 1, std::exp(g(x(0), th(0))));
  };
  m.dsigma_dtheta = [g](const VectorXd& x, const VectorXd& th, int) {
    const double sx = std::sin(x(0));
    const double gp = std::cos(th(0)) * sx - 2.0 * th(0) * sx * sx;
    return MatrixXd::Constant(1, 1, gp * std::exp(g(x(0), th(0))));
  };
  m.d2sigma_dtheta = [g](const VectorXd& x, const VectorXd& th, int, int) {
    const double sx = std::sin(x(0));
    const double gp = std::cos(th(0)) * sx - 2.0 * th(0) * sx * sx;
    const double gpp = -std::sin(th(0)) * sx - 2.0 * sx * sx;
    return MatrixXd::Constant(1, 1, (gpp + gp * gp) * std::exp(g(x(0), th(0))));
  };
  m.dsigma_dx = [g](const VectorXd& x, const VectorXd& th, int) {
    const double gx = std::sin(th(0)) * std::cos(x(0)) - th(0) * th(0) * std::sin(2.0 * x(0));
    return MatrixXd::Constant(1, 1, gx * std::exp(g(x(0), th(0))));
  };
  return m;
}

// dX = (1 + X^2)^theta dw,  Theta subset of (0, 1/2]
ModelSpec make_power() {
  ModelSpec m;
  m.name = "power";
  m.p = m.d = m.m = m.r = 1;
  m.theta_lo = scalar_vec(1e-3);
  m.theta_hi = scalar_vec(0.5);
  m.drift = [](double, const VectorXd&, const VectorXd&) { return VectorXd::Zero(1).eval(); };
  m.sigma = [](const VectorXd& x, const VectorXd& th) {
    return MatrixXd::Constant(1, 1, std::pow(1.0 + x(0) * x(0), th(0)));
  };
  m.dsigma_dtheta = [](const VectorXd& x, const VectorXd& th, int) {
    const double l = std::log(1.0 + x(0) * x(0));
    return MatrixXd::Constant(1, 1, l * std::pow(1.0 + x(0) * x(0), th(0)));
  };
  m.d2sigma_dtheta = [](const VectorXd& x, const VectorXd& th, int, int) {
    const double l = std::log(1.0 + x(0) * x(0));
    return MatrixXd::Constant(1, 1, l * l * std::pow(1.0 + x(0) * x(0), th(0)));
  };
  m.dsigma_dx = [](const VectorXd& x, const VectorXd& th, int) {
    const double base = 1.0 + x(0) * x(0);
    return MatrixXd::Constant(1, 1, 2.0 * th(0) * x(0) * std::pow(base, th(0) - 1.0));
  };
  return m;
}

}  // namespace

ModelSpec make_model(const std::string& name) {
  ModelSpec m;
  if (name == "exp-sin2")
    m = make_exp_sin2();
  else if (name == "sin-sin")
    m = make_sin_sin();
  else if (name == "power")
    m = make_power();
  else
    throw ConfigError("unknown model: " + name);
  m.validate();
  return m;
}

std::vector<std::string> registered_models() { return {"exp-sin2", "sin-sin", "power"}; }

}  // namespace qla
