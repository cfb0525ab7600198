#pragma once

// Monte Carlo limit-theorem experiments: triangular weighted sums of a
// dependent sequence, and walk-sampled sums along one fixed path with
// fresh process replicates. Reports carry normality diagnostics and the
// variance/weight assumption ratios.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "walksum/core.hpp"
#include "walksum/process.hpp"
#include "walksum/stats.hpp"
#include "walksum/variance.hpp"
#include "walksum/walk.hpp"

namespace walksum::harness {

struct NormalityReport {
  double ks = 0.0;
  double ks_critical_1pct = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double skewness_z = 0.0;
  double kurtosis_z = 0.0;
  double skewness_p = 1.0;
  double kurtosis_p = 1.0;
};

// One-sample KS against Normal(0, target_variance) plus moment z-scores.
inline NormalityReport normality_tests(std::span<const double> samples,
                                       double target_variance) {
  if (samples.size() < 100)
    throw ParameterError("normality_tests: need at least 100 samples");
  if (target_variance <= 0.0)
    throw DegenerateError("normality_tests: target variance must be > 0");
  const auto m = stats::moments(samples);
  if (m.variance <= 0.0)
    throw DegenerateError("normality_tests: degenerate samples");
  NormalityReport r;
  r.ks = stats::ks_statistic_normal(samples, target_variance);
  r.ks_critical_1pct = stats::ks_critical(0.01, samples.size());
  r.skewness = m.skewness;
  r.excess_kurtosis = m.excess_kurtosis;
  const double n = static_cast<double>(samples.size());
  r.skewness_z = m.skewness / std::sqrt(6.0 / n);
  r.kurtosis_z = m.excess_kurtosis / std::sqrt(24.0 / n);
  r.skewness_p = 2.0 * (1.0 - stats::normal_cdf(std::fabs(r.skewness_z)));
  r.kurtosis_p = 2.0 * (1.0 - stats::normal_cdf(std::fabs(r.kurtosis_z)));
  return r;
}

struct WeightRule {
  enum class Kind { Equal, SingleSite, Custom };
  Kind kind = Kind::Equal;
  std::vector<double> custom;  // indexed over [-k, k] when Kind::Custom

  static WeightRule equal() { return {Kind::Equal, {}}; }
  static WeightRule single_site() { return {Kind::SingleSite, {}}; }
  static WeightRule custom_weights(std::vector<double> w) {
    if (w.empty() || w.size() % 2 == 0)
      throw ParameterError("weights: custom vector must have odd length 2k+1");
    return {Kind::Custom, std::move(w)};
  }

  double at(std::int64_t i, std::int64_t k) const {
    switch (kind) {
      case Kind::Equal: return 1.0;
      case Kind::SingleSite: return i == 0 ? 1.0 : 0.0;
      case Kind::Custom: {
        const auto idx = static_cast<std::size_t>(i + k);
        return idx < custom.size() ? custom[idx] : 0.0;
      }
    }
    return 0.0;
  }
};

struct KnRule {
  enum class Kind { Linear, Sqrt, Fixed };
  Kind kind = Kind::Linear;
  std::int64_t fixed = 0;

  static KnRule linear() { return {Kind::Linear, 0}; }
  static KnRule sqrt_rule() { return {Kind::Sqrt, 0}; }
  static KnRule fixed_k(std::int64_t k) { return {Kind::Fixed, k}; }

  std::int64_t at(std::int64_t n) const {
    switch (kind) {
      case Kind::Linear: return n;
      case Kind::Sqrt:
        return static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
      case Kind::Fixed: return fixed;
    }
    return n;
  }
};

struct TriangularSpec {
  process::ProcessModel model;
  process::Observable f;
  WeightRule weights;
  KnRule k_rule;
};

struct CltReport {
  std::string experiment;
  std::int64_t n = 0;
  std::int64_t replicates = 0;
  std::uint64_t path_seed = 0;
  std::uint64_t process_seed = 0;
  double target_variance = 0.0;
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  NormalityReport normality;
  double ks_studentized = 0.0;
  double a1_i_ratio = 0.0;    // variance over weight mass
  double a1_ii_ratio = 0.0;   // max weight over sigma_n
  double sum_weights_sq = 0.0;
  double sigma_n2 = 0.0;              // exact variance of the weighted sum
  double unnormalized_variance = 0.0; // empirical counterpart
  double alpha0_over_n = 0.0;         // sampled experiments only
  std::int64_t max_local_time = 0;    // sampled experiments only
  double lindeberg = -1.0;            // filled when requested
  std::vector<std::string> flags;
  std::vector<double> samples;  // normalized sums, one per replicate
};

namespace detail {

// Covariance table for the spec, analytic when available and otherwise a
// pre-pass Monte Carlo estimate (which mixes sampling noise into sigma_n).
inline variance::LagCovariance spec_covariance(const TriangularSpec& spec,
                                               std::uint64_t seed) {
  try {
    return variance::analytic_covariance(spec.model, spec.f);
  } catch (const UnsupportedError&) {
    const double decay = spec.model.decay_rate();
    const std::int64_t lags =
        decay > 0.0 ? static_cast<std::int64_t>(
                          std::ceil(std::log(1e-6) / std::log(decay)))
                    : static_cast<std::int64_t>(
                          spec.model.expanded_coefficients().size());
    std::vector<double> table;
    table.reserve(static_cast<std::size_t>(lags) + 1);
    for (std::int64_t l = 0; l <= lags; ++l)
      table.push_back(process::estimate_covariance(spec.model, spec.f, l, 20000,
                                                   derive_seed(seed, 1'000'000 + l))
                          .value);
    return variance::LagCovariance::from_table(std::move(table));
  }
}

// Exact variance of sum_i a_{n,i} f(xi_i) over i in [-k, k].
inline double triangular_variance(const WeightRule& weights, std::int64_t k,
                                  const variance::LagCovariance& cov) {
  const double scale = std::max({std::fabs(cov.at(0)), std::fabs(cov.at(1)), 1e-100});
  const std::int64_t lag_cut = std::min(cov.cutoff(1e-14 * scale), 2 * k);
  switch (weights.kind) {
    case WeightRule::Kind::Equal: {
      const double width = static_cast<double>(2 * k + 1);
      double acc = width * cov.at(0);
      for (std::int64_t l = 1; l <= lag_cut; ++l)
        acc += 2.0 * (width - static_cast<double>(l)) * cov.at(l);
      return acc;
    }
    case WeightRule::Kind::SingleSite:
      return cov.at(0);
    case WeightRule::Kind::Custom: {
      double acc = 0.0;
      for (std::int64_t l = -lag_cut; l <= lag_cut; ++l) {
        double w_auto = 0.0;
        for (std::int64_t i = -k; i <= k; ++i) {
          const std::int64_t j = i + l;
          if (j < -k || j > k) continue;
          w_auto += weights.at(i, k) * weights.at(j, k);
        }
        acc += w_auto * cov.at(l);
      }
      return acc;
    }
  }
  return 0.0;
}

inline void weight_mass(const WeightRule& weights, std::int64_t k,
                        double& sum_sq, double& max_abs) {
  sum_sq = 0.0;
  max_abs = 0.0;
  for (std::int64_t i = -k; i <= k; ++i) {
    const double a = weights.at(i, k);
    sum_sq += a * a;
    max_abs = std::max(max_abs, std::fabs(a));
  }
}

}  // namespace detail

// R independent realizations of the studentized weighted sum
// sum_i a_{n,i} f(xi_i) / sigma_n, with sigma_n computed from the lag
// covariances rather than estimated from the replicates.
inline CltReport run_triangular(const TriangularSpec& spec, std::int64_t n,
                                std::int64_t replicates, std::uint64_t seed,
                                unsigned threads = 1) {
  if (replicates < 100) throw ParameterError("run_triangular: need replicates >= 100");
  const std::int64_t k = spec.k_rule.at(n);
  if (k < 0) throw ParameterError("run_triangular: negative window");
  const auto cov = detail::spec_covariance(spec, seed);

  double sum_sq = 0.0, max_abs = 0.0;
  detail::weight_mass(spec.weights, k, sum_sq, max_abs);
  if (sum_sq <= 0.0) throw ParameterError("run_triangular: zero weight mass");

  const double sigma_n2 = detail::triangular_variance(spec.weights, k, cov);
  if (sigma_n2 <= 0.0)
    throw DegenerateError("run_triangular: variance of the triangular sum is not positive");
  const double sigma_n = std::sqrt(sigma_n2);

  std::vector<double> samples(static_cast<std::size_t>(replicates));
  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    const auto w =
        process::stationary_window_range(spec.model, -k, k, derive_seed(seed, r));
    double acc = 0.0;
    for (std::int64_t i = -k; i <= k; ++i)
      acc += spec.weights.at(i, k) * spec.f(w.at(i));
    samples[r] = acc / sigma_n;
  });

  CltReport report;
  report.experiment = "clt-triangular";
  report.n = n;
  report.replicates = replicates;
  report.process_seed = seed;
  report.target_variance = 1.0;
  report.sum_weights_sq = sum_sq;
  report.sigma_n2 = sigma_n2;
  const auto m = stats::moments(samples);
  report.empirical_mean = m.mean;
  report.empirical_variance = m.variance;
  report.unnormalized_variance = m.variance * sigma_n2;
  report.normality = normality_tests(samples, 1.0);
  report.ks_studentized = report.normality.ks;
  report.a1_i_ratio = sigma_n2 / sum_sq;
  report.a1_ii_ratio = max_abs / sigma_n;
  if (max_abs * max_abs / sum_sq > 0.05)
    report.flags.push_back("weight-concentration");
  report.samples = std::move(samples);
  return report;
}

// Quenched design: the walk path is fixed by path_seed, and only the
// process is re-drawn across replicates. Samples are the sqrt(n)-normalized
// sums; the target is the asymptotic variance passed by the caller.
inline CltReport run_sampled(const process::ProcessModel& model,
                             const process::Observable& f,
                             const walk::StepLaw& law, std::int64_t n,
                             std::int64_t replicates, std::uint64_t path_seed,
                             std::uint64_t process_seed,
                             const variance::LagCovariance& cov,
                             double sigma2_target, unsigned threads = 1) {
  if (replicates < 100) throw ParameterError("run_sampled: need replicates >= 100");
  if (n < 1) throw ParameterError("run_sampled: n must be >= 1");
  if (sigma2_target <= 0.0)
    throw DegenerateError("run_sampled: asymptotic variance must be > 0");

  const auto path = walk::sample_path(law, n, path_seed);
  const auto field = walk::local_time(path);
  const auto dense = field.dense();
  const std::int64_t lo = field.min_position();
  const std::int64_t hi = field.max_position();

  const double sigma_n2 = variance::sigma_n_empirical(field, cov);
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  std::vector<double> samples(static_cast<std::size_t>(replicates));
  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    const auto w = process::stationary_window_range(model, lo, hi,
                                                    derive_seed(process_seed, r));
    double acc = 0.0;
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] == 0) continue;
      acc += static_cast<double>(dense[i]) * f(w.values[i]);
    }
    samples[r] = acc / sqrt_n;
  });

  CltReport report;
  report.experiment = "clt-sampled";
  report.n = n;
  report.replicates = replicates;
  report.path_seed = path_seed;
  report.process_seed = process_seed;
  report.target_variance = sigma2_target;
  const auto m = stats::moments(samples);
  report.empirical_mean = m.mean;
  report.empirical_variance = m.variance;
  report.normality = normality_tests(samples, sigma2_target);

  const double sample_sd = std::sqrt(sigma_n2 / static_cast<double>(n));
  std::vector<double> studentized(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    studentized[i] = samples[i] / sample_sd;
  report.ks_studentized = stats::ks_statistic_normal(studentized, 1.0);

  const double alpha0 = static_cast<double>(walk::self_intersection(field, 0));
  report.alpha0_over_n = alpha0 / static_cast<double>(n);
  report.max_local_time = field.max_count();
  report.sum_weights_sq = report.alpha0_over_n;  // sum of N_n(i)^2 / n
  report.sigma_n2 = sigma_n2 / static_cast<double>(n);
  report.unnormalized_variance = m.variance;
  report.a1_i_ratio = sigma_n2 / alpha0;
  report.a1_ii_ratio = static_cast<double>(field.max_count()) / std::sqrt(sigma_n2);
  if (report.a1_ii_ratio > 0.5) report.flags.push_back("weight-concentration");
  report.samples = std::move(samples);
  return report;
}

// Resolves the covariance table and the asymptotic variance from the walk
// law (closed-form Green table where available), then runs the experiment.
inline CltReport run_sampled(const process::ProcessModel& model,
                             const process::Observable& f,
                             const walk::StepLaw& law, std::int64_t n,
                             std::int64_t replicates, std::uint64_t path_seed,
                             std::uint64_t process_seed, unsigned threads = 1) {
  if (!law.transient())
    throw TransienceError("run_sampled: the sampling walk must be transient");
  const auto cov = variance::analytic_covariance(model, f);

  walk::GreenTable green;
  if (law.is_nearest_neighbour() || law.is_deterministic()) {
    double bound = 1.0;
    if (law.is_nearest_neighbour()) {
      const double p = law.up_probability();
      bound = 1.0 / std::fabs(2.0 * p - 1.0);
    }
    const std::int64_t trunc = variance::suggested_truncation(cov, bound);
    green = walk::green_exact(law, -trunc, trunc);
  } else {
    const std::int64_t trunc = variance::suggested_truncation(cov, 10.0);
    green = walk::green_mc(law, -trunc, trunc, 10000, 20000,
                           derive_seed(path_seed, 1), threads);
  }
  const auto var_report = variance::sigma2_asymptotic(
      green, cov, (green.hi < -green.lo) ? green.hi : -green.lo);
  if (var_report.degenerate)
    throw DegenerateError("run_sampled: asymptotic variance is not positive");
  return run_sampled(model, f, law, n, replicates, path_seed, process_seed, cov,
                     var_report.sigma2, threads);
}

// Monte Carlo value of the normalized truncated second moments
// sigma_n^{-2} sum_i E((X_{n,i} - clamp(X_{n,i}))^2) at level eps sigma_n.
inline double lindeberg_diagnostic(const TriangularSpec& spec, std::int64_t n,
                                   double epsilon, std::int64_t replicates,
                                   std::uint64_t seed, unsigned threads = 1) {
  if (epsilon <= 0.0) throw ParameterError("lindeberg_diagnostic: epsilon must be > 0");
  if (replicates < 1) throw ParameterError("lindeberg_diagnostic: replicates must be >= 1");
  const std::int64_t k = spec.k_rule.at(n);
  const auto cov = detail::spec_covariance(spec, seed);
  const double sigma_n2 = detail::triangular_variance(spec.weights, k, cov);
  if (sigma_n2 <= 0.0)
    throw DegenerateError("lindeberg_diagnostic: variance of the sum is not positive");
  const double level = epsilon * std::sqrt(sigma_n2);

  std::vector<double> vals(static_cast<std::size_t>(replicates));
  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    const auto w =
        process::stationary_window_range(spec.model, -k, k, derive_seed(seed, r));
    double acc = 0.0;
    for (std::int64_t i = -k; i <= k; ++i) {
      const double x = spec.weights.at(i, k) * spec.f(w.at(i));
      const double excess = std::fabs(x) > level ? std::fabs(x) - level : 0.0;
      acc += excess * excess;
    }
    vals[r] = acc;
  });
  double sum = 0.0;
  for (double v : vals) sum += v;
  return sum / static_cast<double>(replicates) / sigma_n2;
}

}  // namespace walksum::harness
