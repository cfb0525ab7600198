#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "walksum/core.hpp"

namespace walksum::stats {

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

struct MomentSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline MomentSummary moments(std::span<const double> samples) {
  MomentSummary out;
  out.count = samples.size();
  if (samples.empty()) return out;
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  out.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = v - out.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  out.variance = samples.size() > 1 ? m2 * n / (n - 1.0) : 0.0;
  if (m2 > 0.0) {
    out.skewness = m3 / std::pow(m2, 1.5);
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return out;
}

// Sup distance between the empirical CDF of the samples and a target CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ParameterError("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    sup = std::max({sup, hi, lo});
  }
  return sup;
}

// One-sample test against a centred normal with the given variance.
inline double ks_statistic_normal(std::span<const double> samples,
                                  double variance) {
  if (variance <= 0.0) throw DegenerateError("ks_statistic_normal: variance <= 0");
  const double sd = std::sqrt(variance);
  return ks_statistic(std::vector<double>(samples.begin(), samples.end()),
                      [sd](double x) { return normal_cdf(x, 0.0, sd); });
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    sup = std::max(sup, std::fabs(static_cast<double>(i) / na -
                                  static_cast<double>(j) / nb));
  }
  return sup;
}

// Asymptotic Kolmogorov critical values, c(alpha) = sqrt(-ln(alpha/2)/2).
inline double kolmogorov_coefficient(double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) throw ParameterError("alpha in (0,1) required");
  return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

inline double ks_critical(double alpha, std::size_t n) {
  return kolmogorov_coefficient(alpha) / std::sqrt(static_cast<double>(n));
}

inline double ks_two_sample_critical(double alpha, std::size_t n, std::size_t m) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return kolmogorov_coefficient(alpha) * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace walksum::stats
