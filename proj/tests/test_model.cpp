#include <doctest.h>

#include <cmath>

#include "qla/model.hpp"

using namespace qla;

namespace {

ModelSpec constant_sigma_model(double value = 2.0) {
  ModelSpec m;
  m.name = "const";
  m.p = m.d = m.m = m.r = 1;
  m.theta_lo = scalar_vec(-1.0);
  m.theta_hi = scalar_vec(1.0);
  m.drift = [](double, const VectorXd&, const VectorXd&) { return VectorXd::Zero(1).eval(); };
  m.sigma = [value](const VectorXd&, const VectorXd&) {
    return MatrixXd::Constant(1, 1, value);
  };
  return m;
}

}  // namespace

TEST_CASE("s_matrix on registry models") {
  const auto power = make_model("power");
  CHECK(s_matrix(power, scalar_vec(0.0), scalar_vec(0.25))(0, 0) == doctest::Approx(1.0));
  CHECK(s_matrix(power, scalar_vec(1.0), scalar_vec(0.5))(0, 0) == doctest::Approx(2.0));

  const auto es = make_model("exp-sin2");
  CHECK(s_matrix(es, scalar_vec(M_PI / 2), scalar_vec(1.0))(0, 0) ==
        doctest::Approx(std::exp(2.0)).epsilon(1e-12));
}

TEST_CASE("s_matrix rejects theta outside the closed box") {
  const auto es = make_model("exp-sin2");
  CHECK_THROWS_AS(s_matrix(es, scalar_vec(0.0), scalar_vec(4.0)), DomainError);
}

TEST_CASE("s_chol_logdet_inv scalars") {
  const auto c1 = chol_logdet_inv(MatrixXd::Constant(1, 1, 1.0));
  CHECK(c1.lower(0, 0) == doctest::Approx(1.0));
  CHECK(c1.logdet == doctest::Approx(0.0));
  CHECK(c1.inverse(0, 0) == doctest::Approx(1.0));

  const auto c4 = chol_logdet_inv(MatrixXd::Constant(1, 1, 4.0));
  CHECK(c4.lower(0, 0) == doctest::Approx(2.0));
  CHECK(c4.logdet == doctest::Approx(std::log(4.0)));
  CHECK(c4.inverse(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("s_chol_logdet_inv matches the direct 2x2 determinant") {
  MatrixXd a(2, 2);
  a << 2.0, 0.3, 0.7, 1.5;
  MatrixXd s = a * a.transpose();  // SPD
  const auto c = chol_logdet_inv(s);
  const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  CHECK(c.logdet == doctest::Approx(std::log(det)).epsilon(1e-12));
  CHECK((c.inverse * s - MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("chol rejects non-SPD input") {
  MatrixXd s(2, 2);
  s << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(chol_logdet_inv(s), NonSPDError);
}

TEST_CASE("dtheta_s analytic values") {
  const auto es = make_model("exp-sin2");
  // dS/dtheta = 2 sin^2(x) S; at x = pi/2, theta = 0: S = 1, derivative = 2
  const auto ds = dtheta_s(es, scalar_vec(M_PI / 2), scalar_vec(0.0), 1);
  CHECK(ds[0](0, 0) == doctest::Approx(2.0).epsilon(1e-12));

  const auto cm = constant_sigma_model();
  const auto ds0 = dtheta_s(cm, scalar_vec(0.3), scalar_vec(0.1), 1);
  CHECK(ds0[0](0, 0) == doctest::Approx(0.0));
}

TEST_CASE("analytic vs finite-difference derivatives across the registry") {
  for (const auto& name : registered_models()) {
    auto model = make_model(name);
    auto numeric = model;
    numeric.dsigma_dtheta = nullptr;
    numeric.d2sigma_dtheta = nullptr;

    const double lo = model.theta_lo(0), hi = model.theta_hi(0);
    for (int xi = 0; xi < 41; ++xi) {
      const double x = -3.0 + 6.0 * xi / 40.0;
      for (int ti = 2; ti < 39; ++ti) {  // away from the boundary
        const double th = lo + (hi - lo) * ti / 40.0;
        const auto da = dtheta_s(model, scalar_vec(x), scalar_vec(th), 1);
        const auto dn = dtheta_s(numeric, scalar_vec(x), scalar_vec(th), 1);
        const double scale = std::max(1.0, std::abs(da[0](0, 0)));
        CHECK(std::abs(da[0](0, 0) - dn[0](0, 0)) / scale < 1e-6);
      }
    }
  }
}

TEST_CASE("Cholesky succeeds on the x-theta verification grid") {
  for (const auto& name : registered_models()) {
    const auto model = make_model(name);
    const double lo = model.theta_lo(0), hi = model.theta_hi(0);
    for (int xi = 0; xi < 41; ++xi) {
      const double x = -3.0 + 6.0 * xi / 40.0;
      for (int ti = 0; ti < 41; ++ti) {
        const double th = lo + (hi - lo) * ti / 40.0;
        CHECK_NOTHROW(s_chol_logdet_inv(model, scalar_vec(x), scalar_vec(th)));
      }
    }
  }
}

TEST_CASE("s_matrix output is exactly symmetric") {
  ModelSpec m;
  m.name = "rect";
  m.p = 1;
  m.d = 1;
  m.m = 2;
  m.r = 3;
  m.theta_lo = scalar_vec(0.0);
  m.theta_hi = scalar_vec(1.0);
  m.drift = [](double, const VectorXd&, const VectorXd&) { return VectorXd::Zero(2).eval(); };
  m.sigma = [](const VectorXd& x, const VectorXd& th) {
    MatrixXd s(2, 3);
    s << 1.0, 0.2 + th(0), x(0), 0.1, 1.4, th(0) - x(0);
    return s;
  };
  const MatrixXd s = s_matrix(m, scalar_vec(0.7), scalar_vec(0.5));
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("finite-difference derivatives refuse to exit the box") {
  auto model = make_model("power");
  model.dsigma_dtheta = nullptr;
  model.d2sigma_dtheta = nullptr;
  CHECK_THROWS_AS(dtheta_s(model, scalar_vec(1.0), model.theta_hi, 1), DomainError);
}

TEST_CASE("bad model specs are rejected") {
  ModelSpec m = constant_sigma_model();
  m.theta_lo = scalar_vec(1.0);
  m.theta_hi = scalar_vec(1.0);
  CHECK_THROWS_AS(m.validate(), ConfigError);
  CHECK_THROWS_AS(make_model("nope"), ConfigError);
}
