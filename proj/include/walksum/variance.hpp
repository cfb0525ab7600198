#pragma once

// Asymptotic and quenched variances of walk-sampled sums: the Green-weighted
// lag series, the self-intersection quadratic form, the coboundary closed
// form on drifted nearest-neighbour walks, and the weighted-sum variance
// bound built from the dependence series.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "walksum/core.hpp"
#include "walksum/process.hpp"
#include "walksum/walk.hpp"

namespace walksum::variance {

// Symmetric lag-covariance table c(z) = E(f f o T^{|z|}) with a declared
// decay rule, so truncation points can be chosen with an explicit bound.
class LagCovariance {
 public:
  static LagCovariance geometric(double lag0, double rate) {
    if (std::fabs(rate) >= 1.0)
      throw ParameterError("covariance: geometric rate must satisfy |rate| < 1");
    LagCovariance c;
    c.kind_ = Kind::Geometric;
    c.lag0_ = lag0;
    c.rate_ = rate;
    return c;
  }

  static LagCovariance at_zero_only(double lag0) {
    LagCovariance c;
    c.kind_ = Kind::ZeroOnly;
    c.lag0_ = lag0;
    return c;
  }

  static LagCovariance from_table(std::vector<double> lags_from_zero) {
    if (lags_from_zero.empty()) throw ParameterError("covariance: empty table");
    LagCovariance c;
    c.kind_ = Kind::Table;
    c.table_ = std::move(lags_from_zero);
    c.lag0_ = c.table_[0];
    return c;
  }

  double at(std::int64_t z) const {
    const std::int64_t k = static_cast<std::int64_t>(std::llabs(z));
    switch (kind_) {
      case Kind::Geometric:
        return lag0_ * std::pow(rate_, static_cast<double>(k));
      case Kind::ZeroOnly:
        return k == 0 ? lag0_ : 0.0;
      case Kind::Table:
        return static_cast<std::size_t>(k) < table_.size()
                   ? table_[static_cast<std::size_t>(k)]
                   : 0.0;
    }
    return 0.0;
  }

  double lag0() const { return lag0_; }
  bool summable() const { return true; }

  // Upper bound on sum_{|z| > beyond} |c(z)|.
  double abs_tail_bound(std::int64_t beyond) const {
    switch (kind_) {
      case Kind::Geometric: {
        const double r = std::fabs(rate_);
        if (r == 0.0) return 0.0;
        return 2.0 * std::fabs(lag0_) *
               std::pow(r, static_cast<double>(beyond + 1)) / (1.0 - r);
      }
      case Kind::ZeroOnly:
        return 0.0;
      case Kind::Table: {
        double acc = 0.0;
        for (std::size_t k = static_cast<std::size_t>(beyond + 1); k < table_.size(); ++k)
          acc += 2.0 * std::fabs(table_[k]);
        return acc;
      }
    }
    return 0.0;
  }

  // Smallest truncation with absolute tail below tol.
  std::int64_t cutoff(double tol) const {
    std::int64_t z = 0;
    while (abs_tail_bound(z) > tol) {
      ++z;
      if (z > 2'000'000) throw DivergenceError("covariance: tail does not reach tolerance");
    }
    return z;
  }

 private:
  enum class Kind { Geometric, ZeroOnly, Table };
  Kind kind_ = Kind::ZeroOnly;
  double lag0_ = 0.0;
  double rate_ = 0.0;
  std::vector<double> table_;
};

// Analytic covariance table for a (model, observable) pair; throws
// UnsupportedError where the catalog has no closed form.
inline LagCovariance analytic_covariance(const process::ProcessModel& model,
                                         const process::Observable& f) {
  using V = process::ProcessModel::Variant;
  if (f.is_zero()) return LagCovariance::at_zero_only(0.0);
  const double c0 = process::covariance(model, f, 0);
  if (model.is_iid()) return LagCovariance::at_zero_only(c0);
  if (f.kind() != process::Observable::Kind::IdentityCentered)
    throw UnsupportedError("analytic_covariance: only identity observables beyond lag 0");
  switch (model.variant()) {
    case V::AndrewsBernoulli:
      return LagCovariance::geometric(c0, 0.5);
    case V::LinearAr1:
      return LagCovariance::geometric(c0, model.rho());
    case V::IteratedContraction:
      if (model.map() == process::ProcessModel::Map::Affine)
        return LagCovariance::geometric(c0, model.kappa());
      throw UnsupportedError("analytic_covariance: non-affine contraction");
    case V::CausalLinear: {
      std::vector<double> table;
      const auto len = static_cast<std::int64_t>(model.expanded_coefficients().size());
      table.reserve(static_cast<std::size_t>(len));
      for (std::int64_t k = 0; k < len; ++k)
        table.push_back(process::covariance(model, f, k));
      return LagCovariance::from_table(std::move(table));
    }
  }
  throw UnsupportedError("analytic_covariance: unsupported model");
}

struct LagContribution {
  std::int64_t lag = 0;
  double green = 0.0;
  double covariance = 0.0;
  double contribution = 0.0;  // 2 G(0,x) c(x)
};

struct VarianceReport {
  double sigma2 = 0.0;
  double tail_estimate = 0.0;
  std::int64_t truncation = 0;
  bool degenerate = false;  // sigma2 <= 0; the limit theorem needs > 0
  std::vector<LagContribution> contributions;
};

// sigma^2(f) = 2 sum_x G(0,x) c(x) - c(0), truncated at |x| <= X with a
// reported residual estimate.
inline VarianceReport sigma2_asymptotic(const walk::GreenTable& green,
                                        const LagCovariance& cov,
                                        std::int64_t truncation) {
  if (truncation < 0) throw ParameterError("sigma2_asymptotic: truncation must be >= 0");
  if (!green.contains(-truncation) || !green.contains(truncation))
    throw ParameterError("sigma2_asymptotic: green table does not cover the truncation range");
  if (!cov.summable()) throw DivergenceError("sigma2_asymptotic: covariances not summable");

  VarianceReport report;
  report.truncation = truncation;
  report.contributions.reserve(static_cast<std::size_t>(2 * truncation + 1));
  double acc = 0.0;
  for (std::int64_t x = -truncation; x <= truncation; ++x) {
    LagContribution row;
    row.lag = x;
    row.green = green.at(x);
    row.covariance = cov.at(x);
    row.contribution = 2.0 * row.green * row.covariance;
    acc += row.contribution;
    report.contributions.push_back(row);
  }
  report.sigma2 = acc - cov.at(0);
  const double total_abs_cov = std::fabs(cov.at(0)) + cov.abs_tail_bound(0);
  report.tail_estimate = 2.0 * green.max_value() * cov.abs_tail_bound(truncation) +
                         2.0 * green.truncation_bound * total_abs_cov;
  report.degenerate = report.sigma2 <= 0.0;
  return report;
}

// Truncation point such that the Green-weighted covariance tail stays
// below tol; green_bound should dominate sup_x G(0,x).
inline std::int64_t suggested_truncation(const LagCovariance& cov,
                                         double green_bound,
                                         double tol = 1e-10) {
  return cov.cutoff(tol / (2.0 * std::max(green_bound, 1.0)));
}

// Quenched variance of the sampled sum for a fixed path:
// sigma_n^2(f) = sum_z alpha(n,z) c(z).
inline double sigma_n_empirical(const walk::LocalTimeField& field,
                                const LagCovariance& cov) {
  const double scale =
      std::max({std::fabs(cov.at(0)), std::fabs(cov.at(1)), 1e-100});
  const std::int64_t range = field.max_position() - field.min_position();
  const std::int64_t z_cut = std::min(cov.cutoff(1e-14 * scale), range);
  const auto profile = walk::self_intersection_profile(field, z_cut);
  double acc = static_cast<double>(profile[0]) * cov.at(0);
  for (std::int64_t z = 1; z <= z_cut; ++z)
    acc += 2.0 * static_cast<double>(profile[static_cast<std::size_t>(z)]) *
           cov.at(z);
  return acc;
}

struct ConvergencePoint {
  std::int64_t n = 0;
  double sigma_n2_over_n = 0.0;
};

// sigma_n^2(f)/n along a nested path: one walk realization, evaluated at
// each grid point on its own prefix.
inline std::vector<ConvergencePoint> variance_convergence(
    const process::ProcessModel& model, const process::Observable& f,
    const walk::StepLaw& law, std::span<const std::int64_t> n_grid,
    std::uint64_t seed) {
  if (n_grid.empty()) throw ParameterError("variance_convergence: empty grid");
  for (std::size_t i = 0; i + 1 < n_grid.size(); ++i)
    if (n_grid[i] >= n_grid[i + 1])
      throw ParameterError("variance_convergence: grid must be strictly increasing");
  if (n_grid.front() < 1) throw ParameterError("variance_convergence: n must be >= 1");

  const LagCovariance cov = analytic_covariance(model, f);
  const auto path = walk::sample_path(law, n_grid.back(), seed);
  std::vector<ConvergencePoint> out;
  out.reserve(n_grid.size());
  for (std::int64_t n : n_grid) {
    const auto field = walk::LocalTimeField::from_positions(
        std::span<const std::int64_t>(path.positions)
            .first(static_cast<std::size_t>(n) + 1));
    out.push_back({n, sigma_n_empirical(field, cov) / static_cast<double>(n)});
  }
  return out;
}

// Closed form for sigma^2(h - h o T) on the drifted nearest-neighbour walk
// with up-probability p > 1/2, from the lag covariances of h.
inline double cocycle_variance(const LagCovariance& h_cov, double p) {
  if (p <= 0.5 || p > 1.0)
    throw ParameterError("cocycle_variance: p must lie in (1/2, 1]");
  if (!h_cov.summable()) throw DivergenceError("cocycle_variance: covariances not summable");
  const double q = 1.0 - p;
  double series = 0.0;
  double q_pow = 1.0;  // q^{x-1}
  double p_pow = p * p;  // p^{x+1}
  for (std::int64_t x = 1; x <= 400000; ++x) {
    const double term = (p - q) * q_pow / p_pow * h_cov.at(x);
    series += term;
    q_pow *= q;
    p_pow *= p;
    if (q_pow == 0.0) break;
    if (std::fabs(term) < 1e-18 * (1.0 + std::fabs(series)) && x > 4) break;
  }
  return 2.0 * q / p * h_cov.at(0) + 2.0 * h_cov.at(1) - 2.0 * series;
}

inline double weighted_variance_constant(double sup_second_moment, double theta_sum) {
  if (sup_second_moment < 0.0 || theta_sum < 0.0)
    throw ParameterError("variance bound: inputs must be >= 0");
  return sup_second_moment + 2.0 * std::sqrt(sup_second_moment) * theta_sum;
}

// Var(sum_i a_i eta_i) <= C sum_i a_i^2 with C from the second-moment sup
// and the dependence series.
inline double weighted_variance_bound(std::span<const double> weights,
                               double sup_second_moment, double theta_sum) {
  const double c = weighted_variance_constant(sup_second_moment, theta_sum);
  double sum_sq = 0.0;
  for (double a : weights) sum_sq += a * a;
  return c * sum_sq;
}

}  // namespace walksum::variance
