#include "qla/stats.hpp"

#include <algorithm>
#include <cmath>

namespace qla {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(sample[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(f - lo, hi - f));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

WilsonInterval wilson_interval(long successes, long trials, double z) {
  WilsonInterval w;
  if (trials <= 0) return w;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  w.lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  w.hi = successes == trials ? 1.0 : std::min(1.0, center + half);
  return w;
}

std::vector<double> isotonic_nonincreasing(const std::vector<double>& values) {
  // PAVA on the negated sequence gives the nondecreasing fit; negate back.
  const std::size_t n = values.size();
  std::vector<double> level(n), weight(n);
  std::vector<std::size_t> len(n);
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    level[blocks] = -values[i];
    weight[blocks] = 1.0;
    len[blocks] = 1;
    ++blocks;
    while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
      const double w = weight[blocks - 2] + weight[blocks - 1];
      level[blocks - 2] = (weight[blocks - 2] * level[blocks - 2] + weight[blocks - 1] * level[blocks - 1]) / w;
      weight[blocks - 2] = w;
      len[blocks - 2] += len[blocks - 1];
      --blocks;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t j = 0; j < len[b]; ++j) out.push_back(-level[b]);
  return out;
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return {0.0, n ? sy / n : 0.0};
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

Moments sample_moments(const std::vector<double>& values) {
  Moments m;
  m.count = values.size();
  if (m.count == 0) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / m.count;
  if (m.count >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / (m.count - 1));
  }
  return m;
}

double central_moment(const std::vector<double>& values, int order) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double acc = 0.0;
  for (double v : values) acc += std::pow(v - mean, order);
  return acc / values.size();
}

}  // namespace qla
