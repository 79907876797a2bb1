#include <doctest.h>

#include <cmath>
#include <vector>

#include "qla/rng.hpp"
#include "qla/simulate.hpp"

using namespace qla;

namespace {

ModelSpec flat_model(double sigma_value, bool zero_drift = true) {
  ModelSpec m;
  m.name = "flat";
  m.p = m.d = m.m = m.r = 1;
  m.theta_lo = scalar_vec(-1.0);
  m.theta_hi = scalar_vec(1.0);
  if (zero_drift)
    m.drift = [](double, const VectorXd&, const VectorXd&) { return VectorXd::Zero(1).eval(); };
  m.sigma = [sigma_value](const VectorXd&, const VectorXd&) {
    return MatrixXd::Constant(1, 1, sigma_value);
  };
  m.dsigma_dx = [](const VectorXd&, const VectorXd&, int) { return MatrixXd::Zero(1, 1); };
  return m;
}

// Reference one-step Milstein used to cross-check the library stepping.
double milstein_step(const ModelSpec& model, double t, double y, const VectorXd& theta, double dw,
                     double delta) {
  const VectorXd yv = scalar_vec(y);
  const double sig = model.sigma(yv, theta)(0, 0);
  const double sp = model.dsigma_dx(yv, theta, 0)(0, 0);
  return y + model.drift(t, yv, yv)(0) * delta + sig * dw + 0.5 * sig * sp * (dw * dw - delta);
}

}  // namespace

TEST_CASE("zero volatility and drift give a constant path") {
  auto m = flat_model(0.0);
  const auto path = simulate_path(m, 20, 1.0, scalar_vec(0.0), 7, Scheme::euler, 3, scalar_vec(1.0));
  for (int k = 0; k <= 20; ++k) CHECK(path.y(k, 0) == 1.0);
  CHECK(path.t(20) == 1.0);
  CHECK(path.t(7) == doctest::Approx(7.0 / 20.0).epsilon(1e-16));
}

TEST_CASE("unit volatility increments have the exact Gaussian variance") {
  auto m = flat_model(1.0);
  const int n = 100000;
  const double T = 1.0;
  const auto path = simulate_path(m, n, T, scalar_vec(0.0), 11, Scheme::euler, 1);
  std::vector<double> inc(n);
  double mean = 0.0;
  for (int k = 1; k <= n; ++k) {
    inc[k - 1] = path.y(k, 0) - path.y(k - 1, 0);
    mean += inc[k - 1];
  }
  mean /= n;
  double var = 0.0;
  for (double v : inc) var += (v - mean) * (v - mean);
  var /= (n - 1);
  const double target = T / n;
  const double se = target * std::sqrt(2.0 / (n - 1));
  CHECK(std::abs(var - target) < 3.0 * se);
}

TEST_CASE("same inputs give bit-identical paths") {
  const auto m = make_model("exp-sin2");
  const auto a = simulate_path(m, 100, 1.0, scalar_vec(1.0), 42, Scheme::milstein, 10);
  const auto b = simulate_path(m, 100, 1.0, scalar_vec(1.0), 42, Scheme::milstein, 10);
  CHECK(a.y == b.y);
  CHECK(a.x == b.x);
}

TEST_CASE("Milstein is rejected for multidimensional drivers") {
  ModelSpec m = flat_model(1.0);
  m.r = 2;
  m.sigma = [](const VectorXd&, const VectorXd&) { return MatrixXd::Ones(1, 2).eval(); };
  CHECK_THROWS_AS(simulate_path(m, 10, 1.0, scalar_vec(0.0), 1, Scheme::milstein, 1),
                  UnsupportedScheme);
  CHECK_NOTHROW(simulate_path(m, 10, 1.0, scalar_vec(0.0), 1, Scheme::euler, 1));
}

TEST_CASE("explosive drift triggers the blowup guard") {
  ModelSpec m = flat_model(0.0);
  m.drift = [](double, const VectorXd&, const VectorXd& y) {
    return (y.array() * y.array() * y.array()).matrix().eval();
  };
  CHECK_THROWS_AS(simulate_path(m, 50, 10.0, scalar_vec(0.0), 1, Scheme::euler, 1, scalar_vec(5.0)),
                  NumericBlowup);
}

TEST_CASE("gaussian stream determinism and stream independence") {
  GaussianStream a(123, 5), b(123, 5);
  for (int i = 0; i < 1000; ++i) CHECK(a.normal() == b.normal());

  GaussianStream s1(123, 1), s2(123, 2);
  const int n = 100000;
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s1.normal(), y = s2.normal();
    sxy += x * y;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double rho = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(std::abs(rho) < 0.01);
}

TEST_CASE("gaussian stream moments") {
  GaussianStream g(7, 0);
  const long n = 1000000;
  double sum = 0, ss = 0;
  for (long i = 0; i < n; ++i) {
    const double z = g.normal();
    sum += z;
    ss += z * z;
  }
  const double mean = sum / n;
  const double var = ss / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("substeps refine the Milstein endpoint monotonically") {
  const auto model = make_model("exp-sin2");
  const VectorXd theta = scalar_vec(1.0);
  const int n = 50;
  const double T = 1.0;
  const int fine = 8;

  double err[3] = {0.0, 0.0, 0.0};  // substeps 1, 2, 4 vs the fine reference
  const int paths = 100;
  for (int j = 0; j < paths; ++j) {
    const std::uint64_t seed = 1000 + j;
    // Reconstruct the fine Brownian increments the library consumes.
    GaussianStream gs(seed, 0);
    const int total = n * fine;
    const double delta = T / total;
    std::vector<double> dw(total);
    for (int i = 0; i < total; ++i) dw[i] = gs.normal() * std::sqrt(delta);

    const auto ref = simulate_path(model, n, T, theta, seed, Scheme::milstein, fine);
    const double y_ref = ref.y(n, 0);

    int level = 0;
    for (int s : {1, 2, 4}) {
      const int agg = fine / s;
      double y = 0.0;
      for (int i = 0; i < n * s; ++i) {
        double w = 0.0;
        for (int a = 0; a < agg; ++a) w += dw[i * agg + a];
        y = milstein_step(model, i * (T / (n * s)), y, theta, w, T / (n * s));
      }
      err[level++] += std::abs(y - y_ref) / paths;
    }
  }
  CHECK(err[0] > err[1]);
  CHECK(err[1] > err[2]);
}

TEST_CASE("library stepping matches the reference Milstein update") {
  const auto model = make_model("sin-sin");
  const VectorXd theta = scalar_vec(0.3);
  const int n = 25;
  const double T = 0.5;
  const std::uint64_t seed = 99;
  const auto path = simulate_path(model, n, T, theta, seed, Scheme::milstein, 1);

  GaussianStream gs(seed, 0);
  const double delta = T / n;
  double y = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dw = gs.normal() * std::sqrt(delta);
    y = milstein_step(model, i * delta, y, theta, dw, delta);
  }
  CHECK(path.y(n, 0) == doctest::Approx(y).epsilon(1e-14));
}

TEST_CASE("input validation") {
  const auto m = make_model("power");
  CHECK_THROWS_AS(simulate_path(m, 0, 1.0, scalar_vec(0.3), 1), ConfigError);
  CHECK_THROWS_AS(simulate_path(m, 10, 1.0, scalar_vec(0.3), 1, Scheme::milstein, 0), ConfigError);
  CHECK_THROWS_AS(simulate_path(m, 10, 1.0, scalar_vec(0.9), 1), DomainError);
}
