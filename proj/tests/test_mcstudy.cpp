#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "qla/mcstudy.hpp"

using namespace qla;

namespace {

StudyConfig small_config() {
  StudyConfig cfg;
  cfg.model = "exp-sin2";
  cfg.theta_star = scalar_vec(1.0);
  cfg.T = 1.0;
  cfg.h_list = {1.0 / 50.0};
  cfg.replicates = 8;
  cfg.estimators = {{EstimatorKind::qmle, scalar_vec(0.0), true}};
  cfg.seed = 7;
  cfg.substeps = 2;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("one replicate yields zero dispersion") {
  StudyConfig cfg = small_config();
  cfg.replicates = 1;
  const auto rep = run_study(cfg);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].count == 1);
  CHECK(rep.cells[0].sd(0) == 0.0);
  CHECK(rep.cells[0].mc_standard_error(0) == 0.0);
  CHECK(rep.cells[0].failure_count == 0);
}

TEST_CASE("report is bit-identical across thread counts") {
  StudyConfig cfg = small_config();
  cfg.dump_reps = true;
  cfg.threads = 1;
  const auto r1 = run_study(cfg);
  cfg.threads = 4;
  const auto r4 = run_study(cfg);
  REQUIRE(r1.cells.size() == r4.cells.size());
  for (std::size_t i = 0; i < r1.cells.size(); ++i) {
    CHECK(r1.cells[i].mean(0) == r4.cells[i].mean(0));
    CHECK(r1.cells[i].sd(0) == r4.cells[i].sd(0));
  }
  REQUIRE(r1.reps.size() == r4.reps.size());
  for (std::size_t i = 0; i < r1.reps.size(); ++i)
    CHECK(r1.reps[i].theta_hat(0) == r4.reps[i].theta_hat(0));
}

TEST_CASE("cell moments match the dumped replicate records") {
  StudyConfig cfg = small_config();
  cfg.dump_reps = true;
  const auto rep = run_study(cfg);
  REQUIRE(rep.cells.size() == 1);
  REQUIRE(static_cast<long>(rep.reps.size()) == cfg.replicates);

  double mean = 0.0;
  for (const auto& r : rep.reps) mean += r.theta_hat(0);
  mean /= static_cast<double>(rep.reps.size());
  double ss = 0.0;
  for (const auto& r : rep.reps) ss += (r.theta_hat(0) - mean) * (r.theta_hat(0) - mean);
  const double sd = std::sqrt(ss / (static_cast<double>(rep.reps.size()) - 1.0));

  CHECK(rep.cells[0].mean(0) == doctest::Approx(mean).epsilon(1e-14));
  CHECK(rep.cells[0].sd(0) == doctest::Approx(sd).epsilon(1e-12));
  CHECK(rep.cells[0].mc_standard_error(0) ==
        doctest::Approx(sd / std::sqrt(8.0)).epsilon(1e-12));
  // Estimates should be in the right neighbourhood of theta* = 1.
  CHECK(std::abs(rep.cells[0].mean(0) - 1.0) < 0.5);
}

TEST_CASE("every estimator sees the same path per replicate") {
  StudyConfig cfg = small_config();
  cfg.replicates = 4;
  cfg.estimators = {{EstimatorKind::qmle, scalar_vec(0.0), true},
                    {EstimatorKind::bayes, VectorXd(), true},
                    {EstimatorKind::qmle_bayes_init, VectorXd(), true}};
  cfg.dump_reps = true;
  const auto rep = run_study(cfg);
  CHECK(rep.cells.size() == 3);
  CHECK(rep.reps.size() == 12);
  // qmle and qmle-bayes-init share the path and the global optimum, so they
  // should agree to optimizer tolerance replicate by replicate.
  for (long j = 0; j < 4; ++j) {
    double q = 0.0, qb = 0.0;
    for (const auto& r : rep.reps) {
      if (r.rep != j) continue;
      if (r.estimator.rfind("qmle(", 0) == 0) q = r.theta_hat(0);
      if (r.estimator == "qmle-bayes-init") qb = r.theta_hat(0);
    }
    CHECK(std::abs(q - qb) < 1e-6);
  }
}

TEST_CASE("config json round trip") {
  StudyConfig cfg = small_config();
  cfg.h_list = {0.02, 0.01};
  cfg.estimators = {{EstimatorKind::qmle, scalar_vec(0.5), false},
                    {EstimatorKind::bayes, VectorXd(), true}};
  cfg.dump_reps = true;
  const auto back = StudyConfig::from_json(cfg.to_json());
  CHECK(back.model == cfg.model);
  CHECK(back.theta_star(0) == cfg.theta_star(0));
  CHECK(back.T == cfg.T);
  CHECK(back.h_list == cfg.h_list);
  CHECK(back.replicates == cfg.replicates);
  CHECK(back.seed == cfg.seed);
  CHECK(back.substeps == cfg.substeps);
  CHECK(back.dump_reps == cfg.dump_reps);
  REQUIRE(back.estimators.size() == 2);
  CHECK(back.estimators[0].kind == EstimatorKind::qmle);
  CHECK(back.estimators[0].init(0) == 0.5);
  CHECK_FALSE(back.estimators[0].multistart);
  CHECK(back.estimators[1].kind == EstimatorKind::bayes);
}

TEST_CASE("config validation") {
  StudyConfig cfg = small_config();
  cfg.model = "nope";
  CHECK_THROWS_AS(run_study(cfg), ConfigError);  // unknown models fail at resolution

  cfg = small_config();
  cfg.h_list = {0.02, -0.01};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.replicates = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.estimators.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // h must divide T into an integer n.
  cfg = small_config();
  cfg.h_list = {0.3};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  CHECK_THROWS_AS(StudyConfig::from_json("{}"), ConfigError);
  CHECK_THROWS_AS(StudyConfig::from_json("{\"schema\": 99}"), ConfigError);
  CHECK_THROWS_AS(StudyConfig::from_json("not json"), ConfigError);
}

TEST_CASE("summaries have the expected shape") {
  StudyConfig cfg = small_config();
  cfg.replicates = 2;
  cfg.estimators = {{EstimatorKind::qmle, scalar_vec(0.0), true},
                    {EstimatorKind::bayes, VectorXd(), true}};
  const auto rep = run_study(cfg);
  const std::string text = summarize_text(rep);
  CHECK(text.find("1/50") != std::string::npos);  // h reported as 1/n
  CHECK(text.find("qmle") != std::string::npos);
  CHECK(text.find("bayes") != std::string::npos);

  const std::string csv = summarize_csv(rep);
  // Header plus one row per (h, estimator) cell.
  long rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == 3);
  CHECK(csv.find("mean") != std::string::npos);
  CHECK(csv.find("sd") != std::string::npos);
}

TEST_CASE("successes and failures always account for every replicate") {
  StudyConfig cfg = small_config();
  cfg.estimators = {{EstimatorKind::qmle, scalar_vec(0.0), true}};
  const auto rep = run_study(cfg);
  CHECK(rep.cells[0].count + rep.cells[0].failure_count == cfg.replicates);
}

TEST_CASE("resolve_threads") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
