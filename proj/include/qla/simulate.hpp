#pragma once

#include <cstdint>

#include "qla/model.hpp"

namespace qla {

enum class Scheme { euler, milstein };

struct SamplePath {
  int n = 0;
  double T = 0.0;
  VectorXd t;   // n+1 times, t_k = k*T/n exactly
  MatrixXd x;   // (n+1) x d
  MatrixXd y;   // (n+1) x m
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::milstein;
  int substeps = 1;
};

// Simulates on a fine grid of n*substeps steps and subsamples every
// substeps-th point. Milstein is available for d = m = r = 1 only.
SamplePath simulate_path(const ModelSpec& model, int n, double T, const VectorXd& theta_star,
                         std::uint64_t seed, Scheme scheme = Scheme::milstein, int substeps = 10,
                         const VectorXd& y0 = VectorXd::Zero(0));

}  // namespace qla
