#pragma once

// Test-side reference statistics, written independently of the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Asymptotic Kolmogorov tail P(K > x) = 2 sum (-1)^{j-1} exp(-2 j^2 x^2).
inline double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic;
  double p_value;
};

// One-sample KS test with the small-sample correction of Stephens (1970).
inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  return {d, kolmogorov_tail((root + 0.12 + 0.11 / root) * d)};
}

inline double exponential_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

}  // namespace oracle
