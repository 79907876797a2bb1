#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qla/estimate.hpp"

namespace qla {

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::qmle;
  VectorXd init;           // qmle only; defaults to the box center
  bool multistart = true;  // qmle only
  std::string label() const;
};

struct StudyConfig {
  std::string model;
  VectorXd theta_star;
  double T = 1.0;
  std::vector<double> h_list;
  long replicates = 1;
  std::vector<EstimatorSpec> estimators;
  std::uint64_t seed = 1;
  int substeps = 10;
  int threads = 0;  // 0: decide from QLA_THREADS / hardware
  bool dump_reps = false;

  void validate() const;
  static StudyConfig from_json(const std::string& text);
  std::string to_json() const;
};

struct McCell {
  double h = 0.0;
  std::string estimator;
  VectorXd mean, sd, mc_standard_error;
  long count = 0;
  long failure_count = 0;
};

struct RepRecord {
  long rep = 0;
  double h = 0.0;
  std::string estimator;
  VectorXd theta_hat;
  bool ok = false;
  bool converged = false;
};

struct McReport {
  StudyConfig config;
  std::vector<McCell> cells;
  std::vector<RepRecord> reps;  // populated when config.dump_reps

  std::string to_json() const;
  std::string reps_csv() const;
};

// Runs the full study: per h and replicate one common path feeds every
// estimator; failed estimations are excluded from the moments but counted.
// The report is bit-identical for any worker count.
McReport run_study(const StudyConfig& cfg);

// Paper-style layout: one row per h, mean/s.d. column pair per estimator.
std::string summarize_text(const McReport& report);
std::string summarize_csv(const McReport& report);

int resolve_threads(int requested);

}  // namespace qla
