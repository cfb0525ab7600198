#pragma once

// Mean estimation from randomly sampled observations: the sampled mean,
// its asymptotic variance a(S) under a positive-step sampling walk, the
// normal confidence interval, and the rate-constrained optimal step law
// for geometric covariances (with a brute-force optimality oracle).

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "walksum/core.hpp"
#include "walksum/process.hpp"
#include "walksum/variance.hpp"
#include "walksum/walk.hpp"

namespace walksum::estimation {

struct SamplingDesign {
  walk::StepLaw law = walk::StepLaw::deterministic(1);
  double kappa = 1.0;       // rate budget: mean step <= kappa
  double mean_step = 1.0;   // analytic mean of the step law
  bool tie = false;         // optimizer hit a non-unique optimum

  static SamplingDesign from_law(walk::StepLaw step_law, double budget) {
    for (std::int64_t x : step_law.support())
      if (x < 1) throw ParameterError("sampling design: steps must be positive integers");
    SamplingDesign d;
    d.mean_step = step_law.mean();
    d.law = std::move(step_law);
    d.kappa = budget;
    return d;
  }
};

inline double sampled_mean(std::span<const double> values) {
  if (values.empty()) throw ParameterError("sampled_mean: no values");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

namespace detail {

// phi = E rho^{step}, the step-law generating function at rho.
inline double step_generating(const walk::StepLaw& law, double rho) {
  double acc = 0.0;
  for (std::size_t i = 0; i < law.support().size(); ++i)
    acc += law.probabilities()[i] *
           std::pow(rho, static_cast<double>(law.support()[i]));
  return acc;
}

}  // namespace detail

// a(S) = sum_k Cov(xi_{S_1}, xi_{S_{|k|+1}}). For geometric covariances
// c(j) = v rho^j this is v (1+phi)/(1-phi) with phi the step generating
// function at rho; finite tables are summed through convolution powers of
// the step law (steps are >= 1, so the powers leave any finite lag range).
inline double a_of_s(const variance::LagCovariance& cov,
                     const walk::StepLaw& law) {
  for (std::int64_t x : law.support())
    if (x < 1) throw ParameterError("a_of_s: steps must be positive integers");
  if (!cov.summable()) throw DivergenceError("a_of_s: covariances not summable");

  const double c0 = cov.at(0);
  // Geometric detection through two probe lags.
  const double c1 = cov.at(1);
  if (c1 != 0.0 && c0 != 0.0) {
    const double rho = c1 / c0;
    const double c2 = cov.at(2);
    if (std::fabs(rho) < 1.0 && std::fabs(c2 - c0 * rho * rho) <=
                                    1e-12 * std::max(1.0, std::fabs(c0))) {
      bool geometric = true;
      for (std::int64_t j = 3; j <= 8; ++j) {
        if (std::fabs(cov.at(j) - c0 * std::pow(rho, static_cast<double>(j))) >
            1e-10 * std::max(1.0, std::fabs(c0))) {
          geometric = false;
          break;
        }
      }
      if (geometric) {
        const double phi = detail::step_generating(law, rho);
        return c0 * (1.0 + phi) / (1.0 - phi);
      }
    }
  }

  // General summable table: accumulate E c(S_k - S_1) over k.
  const double scale = std::max(std::fabs(c0), 1e-100);
  const std::int64_t max_lag = cov.cutoff(1e-14 * scale);
  std::map<std::int64_t, double> pmf;
  for (std::size_t i = 0; i < law.support().size(); ++i)
    if (law.probabilities()[i] > 0.0) pmf[law.support()[i]] = law.probabilities()[i];

  double acc = c0;
  std::map<std::int64_t, double> current = pmf;
  for (std::int64_t k = 1;; ++k) {
    double contrib = 0.0;
    bool in_range = false;
    for (const auto& [d, p] : current) {
      if (d <= max_lag) {
        in_range = true;
        contrib += p * cov.at(d);
      }
    }
    acc += 2.0 * contrib;
    if (!in_range) break;
    // Convolve one more step, pruning mass that left the lag range.
    std::map<std::int64_t, double> next;
    for (const auto& [d, p] : current) {
      if (d > max_lag) continue;
      for (const auto& [s, q] : pmf) next[d + s] += p * q;
    }
    if (next.empty()) break;
    current = std::move(next);
    if (k > max_lag + 2) break;
  }
  return acc;
}

// Rate-constrained optimal step law for a geometric covariance with
// correlation rho: the single step for rho < 0, and the adjacent two-point
// law with mean exactly kappa for rho > 0. rho = 0 is a tie; the cheapest
// design is returned flagged.
inline SamplingDesign kappa_optimal_law(double rho, double kappa) {
  if (std::fabs(rho) >= 1.0) throw ParameterError("kappa_optimal_law: |rho| < 1 required");
  if (kappa < 1.0) throw ParameterError("kappa_optimal_law: kappa must be >= 1");
  if (rho == 0.0) {
    auto d = SamplingDesign::from_law(walk::StepLaw::deterministic(1), kappa);
    d.tie = true;
    return d;
  }
  if (rho < 0.0) return SamplingDesign::from_law(walk::StepLaw::deterministic(1), kappa);

  const auto base = static_cast<std::int64_t>(std::floor(kappa));
  const double frac = kappa - static_cast<double>(base);
  if (frac == 0.0)
    return SamplingDesign::from_law(walk::StepLaw::deterministic(base), kappa);
  auto design = SamplingDesign::from_law(
      walk::StepLaw({base, base + 1}, {1.0 - frac, frac}), kappa);
  design.mean_step = kappa;  // base (1-frac) + (base+1) frac telescopes
  return design;
}

// Independent optimality oracle: minimize the step generating function over
// all laws on {1..max_support} with mean at most kappa. The feasible set is
// a polytope whose vertices are single points below the budget and pairs
// with the budget active, so vertex enumeration is exhaustive.
inline SamplingDesign brute_force_optimal(double rho, double kappa,
                                          std::int64_t max_support) {
  if (std::fabs(rho) >= 1.0) throw ParameterError("brute_force_optimal: |rho| < 1 required");
  if (kappa < 1.0) throw ParameterError("brute_force_optimal: kappa must be >= 1");
  if (max_support < static_cast<std::int64_t>(std::ceil(kappa)) + 2)
    throw ParameterError("brute_force_optimal: support cap too small for the budget");

  double best_phi = std::numeric_limits<double>::infinity();
  walk::StepLaw best = walk::StepLaw::deterministic(1);
  double best_mean = 1.0;

  for (std::int64_t x = 1; x <= max_support; ++x) {
    if (static_cast<double>(x) > kappa) break;
    const double phi = std::pow(rho, static_cast<double>(x));
    if (phi < best_phi - 1e-15) {
      best_phi = phi;
      best = walk::StepLaw::deterministic(x);
      best_mean = static_cast<double>(x);
    }
  }
  for (std::int64_t x = 1; x <= max_support; ++x) {
    for (std::int64_t y = x + 1; y <= max_support; ++y) {
      const double w = (static_cast<double>(y) - kappa) /
                       static_cast<double>(y - x);
      if (w <= 0.0 || w >= 1.0) continue;  // budget not active between x and y
      const double phi = w * std::pow(rho, static_cast<double>(x)) +
                         (1.0 - w) * std::pow(rho, static_cast<double>(y));
      if (phi < best_phi - 1e-15) {
        best_phi = phi;
        best = walk::StepLaw({x, y}, {w, 1.0 - w});
        best_mean = kappa;
      }
    }
  }

  auto design = SamplingDesign::from_law(std::move(best), kappa);
  design.mean_step = best_mean;
  design.tie = rho == 0.0;
  return design;
}

struct EstimationReport {
  double m_hat = 0.0;
  std::int64_t n = 0;
  double a_of_s = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double half_width = 0.0;  // 1.96 sqrt(a(S)/n)
  bool degenerate = false;  // a(S) = 0, interval collapses
  std::uint64_t seed = 0;
};

// Simulates the sampling walk and the process, then reports the sampled
// mean with its asymptotic 95% interval.
inline EstimationReport estimate_with_ci(const process::ProcessModel& model,
                                         const SamplingDesign& design,
                                         std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("estimate_with_ci: n must be >= 1");
  const auto f = process::Observable::identity(model);
  const auto cov = variance::analytic_covariance(model, f);
  const double a = a_of_s(cov, design.law);

  const auto path = walk::sample_path(design.law, n, derive_seed(seed, 0));
  const std::int64_t lo = path.positions[1];
  const std::int64_t hi = path.positions[static_cast<std::size_t>(n)];
  const auto w = process::stationary_window_range(model, lo, hi, derive_seed(seed, 1));

  double acc = 0.0;
  for (std::int64_t i = 1; i <= n; ++i)
    acc += w.at(path.positions[static_cast<std::size_t>(i)]);

  EstimationReport report;
  report.m_hat = acc / static_cast<double>(n);
  report.n = n;
  report.a_of_s = a;
  report.half_width = 1.96 * std::sqrt(std::max(a, 0.0) / static_cast<double>(n));
  report.ci_lo = report.m_hat - report.half_width;
  report.ci_hi = report.m_hat + report.half_width;
  report.degenerate = a <= 0.0;
  report.seed = seed;
  return report;
}

}  // namespace walksum::estimation
