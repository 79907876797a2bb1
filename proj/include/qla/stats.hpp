#pragma once

#include <utility>
#include <vector>

namespace qla {

double normal_cdf(double x);

// One-sample Kolmogorov-Smirnov statistic against N(0,1).
double ks_statistic_normal(std::vector<double> sample);

// Asymptotic p-value P[K > sqrt(n)*d] from the Kolmogorov distribution
// (with the usual small-sample correction factor).
double ks_pvalue(double d, std::size_t n);

// Wilson score interval for a binomial proportion.
struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};
WilsonInterval wilson_interval(long successes, long trials, double z = 1.959963984540054);

// Pool-adjacent-violators fit of a nonincreasing sequence (least squares).
std::vector<double> isotonic_nonincreasing(const std::vector<double>& values);

// Least-squares slope and intercept of y against x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};
Moments sample_moments(const std::vector<double>& values);

double central_moment(const std::vector<double>& values, int order);

}  // namespace qla
