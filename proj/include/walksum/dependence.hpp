#pragma once

// Weak-dependence bookkeeping: catalog upper bounds for the theta_2
// coefficients, exact small-chain values over a Lipschitz dictionary, and
// the summability condition behind the triangular-array limit theorem.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "walksum/core.hpp"
#include "walksum/process.hpp"

namespace walksum::dependence {

// Upper-bound family for theta_2(n). Every catalog model maps onto one of
// these shapes; bounds are non-negative and non-increasing in n.
class DependenceProfile {
 public:
  enum class Kind { Contraction, LinearTail, Geometric, PowerLaw };

  static DependenceProfile contraction(double kappa, double initial_distance) {
    if (kappa < 0.0 || kappa >= 1.0)
      throw ParameterError("profile: contraction factor must lie in [0,1)");
    if (initial_distance < 0.0)
      throw ParameterError("profile: distance must be >= 0");
    DependenceProfile p;
    p.kind_ = Kind::Contraction;
    p.rate_ = kappa;
    p.scale_ = initial_distance;
    return p;
  }

  static DependenceProfile geometric(double C, double rho) {
    if (C < 0.0) throw ParameterError("profile: C must be >= 0");
    if (rho < 0.0 || rho >= 1.0)
      throw ParameterError("profile: geometric rate must lie in [0,1)");
    DependenceProfile p;
    p.kind_ = Kind::Geometric;
    p.rate_ = rho;
    p.scale_ = C;
    return p;
  }

  // Bound C (1+n)^{-a}; the shift keeps the bound finite at n = 0 and
  // makes the full series sum to C (zeta(a) - 1) when C = 1.
  static DependenceProfile power_law(double C, double a) {
    if (C <= 0.0 || a <= 0.0) throw ParameterError("profile: need C > 0 and a > 0");
    DependenceProfile p;
    p.kind_ = Kind::PowerLaw;
    p.scale_ = C;
    p.exponent_ = a;
    return p;
  }

  // Coefficient-tail bound for causal linear filters with iid innovations:
  // theta_2(n) <= noise_distance * sum_{j>=n} |a_j|.
  static DependenceProfile linear_tail(std::vector<double> coeffs, double tail_q,
                                       double noise_distance) {
    if (coeffs.empty()) throw ParameterError("profile: empty coefficient list");
    if (tail_q < 0.0 || tail_q >= 1.0)
      throw ParameterError("profile: tail ratio must lie in [0,1)");
    if (noise_distance < 0.0)
      throw ParameterError("profile: noise distance must be >= 0");
    DependenceProfile p;
    p.kind_ = Kind::LinearTail;
    p.coeffs_ = std::move(coeffs);
    p.rate_ = tail_q;
    p.scale_ = noise_distance;
    return p;
  }

  static DependenceProfile from_model(const process::ProcessModel& model) {
    using V = process::ProcessModel::Variant;
    const double dist = std::sqrt(2.0 * model.marginal_variance());
    switch (model.variant()) {
      case V::AndrewsBernoulli:
        return contraction(0.5, dist);
      case V::LinearAr1:
        return contraction(std::fabs(model.rho()), dist);
      case V::IteratedContraction:
        return contraction(model.kappa(), dist);
      case V::CausalLinear: {
        std::vector<double> abs_coeffs(model.coefficients());
        for (auto& a : abs_coeffs) a = std::fabs(a);
        return linear_tail(std::move(abs_coeffs), model.tail_q(),
                           model.noise().coupling_distance());
      }
    }
    throw ParameterError("profile: unknown model variant");
  }

  Kind kind() const { return kind_; }
  double rate() const { return rate_; }
  double scale() const { return scale_; }
  double exponent() const { return exponent_; }

  // sum_{j>=n} |a_j|, exact through the geometric tail rule.
  double coefficient_tail(std::int64_t n) const {
    if (kind_ != Kind::LinearTail) throw UnsupportedError("profile: not a linear tail");
    const auto J = static_cast<std::int64_t>(coeffs_.size()) - 1;
    const double last = std::fabs(coeffs_.back());
    const double geo = rate_ > 0.0 ? last * rate_ / (1.0 - rate_) : 0.0;
    if (n > J) {
      if (rate_ == 0.0) return 0.0;
      return last * std::pow(rate_, static_cast<double>(n - J)) / (1.0 - rate_);
    }
    double acc = geo;
    for (std::int64_t j = n; j <= J; ++j)
      acc += std::fabs(coeffs_[static_cast<std::size_t>(j)]);
    return acc;
  }

 private:
  Kind kind_ = Kind::Geometric;
  double rate_ = 0.0;
  double scale_ = 0.0;
  double exponent_ = 0.0;
  std::vector<double> coeffs_;
};

inline double theta2_upper(const DependenceProfile& profile, std::int64_t n) {
  if (n < 1) throw ParameterError("theta2_upper: n must be >= 1");
  switch (profile.kind()) {
    case DependenceProfile::Kind::Contraction:
    case DependenceProfile::Kind::Geometric:
      return profile.scale() * std::pow(profile.rate(), static_cast<double>(n));
    case DependenceProfile::Kind::PowerLaw:
      return profile.scale() *
             std::pow(1.0 + static_cast<double>(n), -profile.exponent());
    case DependenceProfile::Kind::LinearTail:
      return profile.scale() * profile.coefficient_tail(n);
  }
  return 0.0;
}

// sum_{l>=1} theta_{1,2}(l) upper bound: partial sum to k_max plus a closed
// form (geometric) or integral (power) tail. This is the series entering
// the variance-bound constant.
inline double theta_series_sum(const DependenceProfile& profile,
                               std::int64_t k_max = 1'000'000) {
  if (k_max < 1) throw ParameterError("theta_series_sum: k_max must be >= 1");
  switch (profile.kind()) {
    case DependenceProfile::Kind::Contraction:
    case DependenceProfile::Kind::Geometric: {
      const double r = profile.rate();
      return profile.scale() * r / (1.0 - r);
    }
    case DependenceProfile::Kind::LinearTail: {
      double acc = 0.0;
      for (std::int64_t l = 1; l <= k_max; ++l) {
        const double t = profile.coefficient_tail(l);
        acc += t;
        if (t < 1e-18 * (1.0 + acc)) break;
      }
      return profile.scale() * acc;
    }
    case DependenceProfile::Kind::PowerLaw: {
      const double a = profile.exponent();
      if (a <= 1.0)
        throw DivergenceError("theta_series_sum: power-law exponent <= 1 diverges");
      double acc = 0.0;
      for (std::int64_t l = 1; l <= k_max; ++l) {
        const double term = std::pow(1.0 + static_cast<double>(l), -a);
        acc += term;
        if (term < 1e-16 * acc && l > 16) {
          acc += std::pow(1.0 + static_cast<double>(l), 1.0 - a) / (a - 1.0);
          return profile.scale() * acc;
        }
      }
      acc += std::pow(1.0 + static_cast<double>(k_max), 1.0 - a) / (a - 1.0);
      return profile.scale() * acc;
    }
  }
  return 0.0;
}

struct A3Verdict {
  bool satisfied = false;
  std::optional<double> witness_epsilon;
  bool envelope_monotone = false;   // x^{3/2} g(x) non-increasing
  bool numerically_cauchy = false;  // partial sums settled below 1e-14
  std::vector<double> partial_sums;
};

// Summability check for g(x) = C x^{-a}: the dyadic series converges for
// some epsilon in (0,1) exactly when a > 3/2. The analytic verdict is
// authoritative; the recorded partial sums are a diagnostic trace.
inline A3Verdict a3_check(double C, double a) {
  if (C <= 0.0 || a <= 0.0) throw ParameterError("a3_check: need C > 0 and a > 0");
  A3Verdict v;
  v.envelope_monotone = a >= 1.5;
  v.satisfied = a > 1.5;
  const double eps = v.satisfied ? std::min(0.999, (1.5 + a) / (2.0 * a)) : 0.999;
  if (v.satisfied) v.witness_epsilon = eps;

  double acc = 0.0;
  double prev_term = 0.0;
  v.partial_sums.reserve(201);
  for (int i = 0; i <= 200; ++i) {
    const double term = C * std::pow(2.0, 1.5 * i - eps * a * i);
    acc += term;
    prev_term = term;
    v.partial_sums.push_back(acc);
    if (!std::isfinite(acc)) break;
  }
  v.numerically_cauchy = std::isfinite(acc) && prev_term < 1e-14 * (1.0 + acc);
  return v;
}

struct MarkovTheta2 {
  double lower_bound = 0.0;
  bool exact = false;
  std::string note;
};

// theta_2(sigma(xi_0), xi_n) for a finite-state chain, restricted to the
// dictionary {identity, -identity, hinges at the state points}. On a state
// space of at most 3 points with the full hinge dictionary this attains
// the supremum; in general it is a guaranteed lower bound.
inline MarkovTheta2 theta2_exact_markov(
    const std::vector<std::vector<double>>& kernel,
    const std::vector<double>& stationary,
    const std::vector<double>& state_values, std::int64_t n,
    std::size_t dictionary_size) {
  const std::size_t m = kernel.size();
  if (m == 0 || stationary.size() != m || state_values.size() != m)
    throw ParameterError("markov theta2: dimension mismatch");
  for (const auto& row : kernel) {
    if (row.size() != m) throw ParameterError("markov theta2: kernel must be square");
    double s = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ParameterError("markov theta2: negative kernel entry");
      s += p;
    }
    if (std::fabs(s - 1.0) > 1e-12)
      throw ParameterError("markov theta2: kernel rows must sum to 1");
  }
  // Invariance check pi P = pi.
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += stationary[i] * kernel[i][j];
    if (std::fabs(s - stationary[j]) > 1e-10)
      throw ParameterError("markov theta2: vector is not invariant under the kernel");
  }
  if (n < 1) throw ParameterError("markov theta2: n must be >= 1");

  // P^n by repeated multiplication.
  std::vector<std::vector<double>> pn(kernel);
  for (std::int64_t step = 1; step < n; ++step) {
    std::vector<std::vector<double>> next(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) {
        const double pik = pn[i][k];
        if (pik == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) next[i][j] += pik * kernel[k][j];
      }
    pn = std::move(next);
  }

  const std::size_t hinges = std::min(dictionary_size, m);
  std::vector<std::vector<double>> dictionary;
  dictionary.reserve(2 + hinges);
  std::vector<double> id(state_values), neg(state_values);
  for (auto& x : neg) x = -x;
  dictionary.push_back(id);
  dictionary.push_back(neg);
  for (std::size_t k = 0; k < hinges; ++k) {
    std::vector<double> h(m);
    for (std::size_t j = 0; j < m; ++j)
      h[j] = std::fabs(state_values[j] - state_values[k]);
    dictionary.push_back(std::move(h));
  }

  double best = 0.0;
  for (const auto& f : dictionary) {
    double ef = 0.0;
    for (std::size_t j = 0; j < m; ++j) ef += stationary[j] * f[j];
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double cond = 0.0;
      for (std::size_t j = 0; j < m; ++j) cond += pn[i][j] * f[j];
      norm_sq += stationary[i] * (cond - ef) * (cond - ef);
    }
    best = std::max(best, std::sqrt(norm_sq));
  }

  MarkovTheta2 out;
  out.lower_bound = best;
  out.exact = m <= 3 && hinges == m;
  out.note = out.exact
                 ? "exact: full hinge dictionary on at most 3 states"
                 : "dictionary-restricted lower bound";
  return out;
}

}  // namespace walksum::dependence
