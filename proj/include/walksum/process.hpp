#pragma once

// Stationary process catalog: a binary-expansion chain on [0,1], linear
// autoregressions, causal linear filters and iterated Lipschitz
// contractions, plus the centred observables evaluated on them.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "walksum/core.hpp"

namespace walksum::process {

struct NoiseSpec {
  enum class Law { Bernoulli, Gaussian, Uniform };

  Law law = Law::Gaussian;
  double p = 0.5;        // Bernoulli
  double mean = 0.0;     // Gaussian
  double sd = 1.0;       // Gaussian
  double lo = 0.0;       // Uniform
  double hi = 1.0;       // Uniform

  static NoiseSpec bernoulli(double p) {
    if (p < 0.0 || p > 1.0) throw ParameterError("noise: Bernoulli p must lie in [0,1]");
    NoiseSpec s;
    s.law = Law::Bernoulli;
    s.p = p;
    return s;
  }
  static NoiseSpec gaussian(double mean, double sd) {
    if (sd < 0.0) throw ParameterError("noise: Gaussian sd must be >= 0");
    NoiseSpec s;
    s.law = Law::Gaussian;
    s.mean = mean;
    s.sd = sd;
    return s;
  }
  static NoiseSpec uniform(double lo, double hi) {
    if (hi < lo) throw ParameterError("noise: Uniform requires lo <= hi");
    NoiseSpec s;
    s.law = Law::Uniform;
    s.lo = lo;
    s.hi = hi;
    return s;
  }

  double mean_value() const {
    switch (law) {
      case Law::Bernoulli: return p;
      case Law::Gaussian: return mean;
      case Law::Uniform: return 0.5 * (lo + hi);
    }
    return 0.0;
  }
  double variance() const {
    switch (law) {
      case Law::Bernoulli: return p * (1.0 - p);
      case Law::Gaussian: return sd * sd;
      case Law::Uniform: return (hi - lo) * (hi - lo) / 12.0;
    }
    return 0.0;
  }
  double second_moment() const {
    const double m = mean_value();
    return variance() + m * m;
  }
  // L2 distance between two independent copies, used by coupling bounds.
  double coupling_distance() const { return std::sqrt(2.0 * variance()); }

  double sample(std::mt19937_64& rng) const {
    switch (law) {
      case Law::Bernoulli:
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p ? 1.0 : 0.0;
      case Law::Gaussian:
        return std::normal_distribution<double>(mean, sd)(rng);
      case Law::Uniform:
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    return 0.0;
  }
};

// The marginal law, when a named one is available analytically. It decides
// which observable centres can be computed in closed form.
enum class MarginalLaw { Uniform01, Gaussian, Unknown };

class ProcessModel {
 public:
  enum class Variant { AndrewsBernoulli, LinearAr1, CausalLinear, IteratedContraction };
  enum class Map { Affine, Sine };

  // xi_n = (xi_{n-1} + eps_n)/2 with Bernoulli(1/2) innovations; the
  // marginal is exactly Uniform[0,1] through the binary expansion
  // xi_n = sum_j 2^{-(j+1)} eps_{n-j}.
  static ProcessModel andrews_bernoulli() {
    ProcessModel m;
    m.variant_ = Variant::AndrewsBernoulli;
    m.noise_ = NoiseSpec::bernoulli(0.5);
    m.marginal_mean_ = 0.5;
    m.marginal_variance_ = 1.0 / 12.0;
    return m;
  }

  // xi_n = rho xi_{n-1} + eps_n, |rho| < 1.
  static ProcessModel linear_ar1(double rho, NoiseSpec noise) {
    if (std::fabs(rho) >= 1.0) throw ParameterError("ar1: |rho| must be < 1");
    ProcessModel m;
    m.variant_ = Variant::LinearAr1;
    m.rho_ = rho;
    m.noise_ = noise;
    m.marginal_mean_ = noise.mean_value() / (1.0 - rho);
    m.marginal_variance_ = noise.variance() / (1.0 - rho * rho);
    return m;
  }

  // xi_n = sum_{j>=0} a_j eps_{n-j}; a finite list plus the geometric tail
  // rule a_j = a_J q^{j-J} for j > J. The expansion is truncated once the
  // coefficients are negligible at double precision.
  static ProcessModel causal_linear(std::vector<double> coeffs, double tail_q,
                                    NoiseSpec noise) {
    if (coeffs.empty()) throw ParameterError("causal linear: empty coefficient list");
    if (tail_q < 0.0 || tail_q >= 1.0)
      throw ParameterError("causal linear: tail ratio must lie in [0,1)");
    ProcessModel m;
    m.variant_ = Variant::CausalLinear;
    m.noise_ = noise;
    m.tail_q_ = tail_q;
    m.coeffs_ = coeffs;
    m.expanded_ = coeffs;
    double scale = 0.0;
    for (double a : coeffs) scale = std::max(scale, std::fabs(a));
    if (tail_q > 0.0 && coeffs.back() != 0.0) {
      double a = coeffs.back();
      for (int extra = 0; extra < 4000; ++extra) {
        a *= tail_q;
        if (std::fabs(a) < 1e-17 * scale) break;
        m.expanded_.push_back(a);
      }
    }
    double sum = 0.0, sum_sq = 0.0;
    for (double a : m.expanded_) {
      sum += a;
      sum_sq += a * a;
    }
    m.marginal_mean_ = noise.mean_value() * sum;
    m.marginal_variance_ = noise.variance() * sum_sq;
    return m;
  }

  // xi_n = F(xi_{n-1}, eps_n) with a kappa-Lipschitz map. The affine map
  // kappa*x + eps has analytic marginals; the sine map kappa*sin(x) + eps
  // requires declared ones.
  static ProcessModel iterated_contraction(
      Map map, double kappa, NoiseSpec noise,
      std::optional<double> marginal_mean = std::nullopt,
      std::optional<double> marginal_variance = std::nullopt) {
    if (kappa < 0.0 || kappa >= 1.0)
      throw ParameterError("iterated contraction: kappa must lie in [0,1)");
    ProcessModel m;
    m.variant_ = Variant::IteratedContraction;
    m.map_ = map;
    m.kappa_ = kappa;
    m.noise_ = noise;
    if (map == Map::Affine) {
      m.marginal_mean_ = marginal_mean.value_or(noise.mean_value() / (1.0 - kappa));
      m.marginal_variance_ =
          marginal_variance.value_or(noise.variance() / (1.0 - kappa * kappa));
    } else {
      if (!marginal_mean || !marginal_variance)
        throw ParameterError(
            "iterated contraction: non-affine maps need declared marginal mean and variance");
      m.marginal_mean_ = *marginal_mean;
      m.marginal_variance_ = *marginal_variance;
    }
    return m;
  }

  Variant variant() const { return variant_; }
  Map map() const { return map_; }
  double rho() const { return rho_; }
  double kappa() const { return kappa_; }
  double tail_q() const { return tail_q_; }
  const NoiseSpec& noise() const { return noise_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  const std::vector<double>& expanded_coefficients() const { return expanded_; }
  double marginal_mean() const { return marginal_mean_; }
  double marginal_variance() const { return marginal_variance_; }
  double marginal_sd() const { return std::sqrt(marginal_variance_); }

  bool is_iid() const {
    switch (variant_) {
      case Variant::LinearAr1: return rho_ == 0.0;
      case Variant::IteratedContraction: return map_ == Map::Affine && kappa_ == 0.0;
      case Variant::CausalLinear: return expanded_.size() == 1;
      case Variant::AndrewsBernoulli: return false;
    }
    return false;
  }

  MarginalLaw marginal_law() const {
    switch (variant_) {
      case Variant::AndrewsBernoulli:
        return MarginalLaw::Uniform01;
      case Variant::LinearAr1:
      case Variant::CausalLinear:
        return noise_.law == NoiseSpec::Law::Gaussian ? MarginalLaw::Gaussian
                                                      : MarginalLaw::Unknown;
      case Variant::IteratedContraction:
        return (map_ == Map::Affine && noise_.law == NoiseSpec::Law::Gaussian)
                   ? MarginalLaw::Gaussian
                   : MarginalLaw::Unknown;
    }
    return MarginalLaw::Unknown;
  }

  // Geometric forgetting rate of the one-sided recursion; 0 means the
  // window is simulated exactly and needs no burn-in.
  double decay_rate() const {
    switch (variant_) {
      case Variant::AndrewsBernoulli: return 0.0;
      case Variant::CausalLinear: return 0.0;
      case Variant::LinearAr1: return std::fabs(rho_);
      case Variant::IteratedContraction: return kappa_;
    }
    return 0.0;
  }

 private:
  Variant variant_ = Variant::AndrewsBernoulli;
  Map map_ = Map::Affine;
  double rho_ = 0.0;
  double kappa_ = 0.0;
  double tail_q_ = 0.0;
  NoiseSpec noise_ = NoiseSpec::bernoulli(0.5);
  std::vector<double> coeffs_;
  std::vector<double> expanded_;
  double marginal_mean_ = 0.0;
  double marginal_variance_ = 0.0;
};

// Initialization bias below double-precision noise after B steps.
inline std::int64_t burn_in(const ProcessModel& model) {
  const double decay = model.decay_rate();
  if (decay <= 0.0) return 0;
  return static_cast<std::int64_t>(
      std::ceil(std::log(1e-12) / std::log(decay)));
}

struct StationaryWindow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;

  std::size_t size() const { return values.size(); }
  double at(std::int64_t i) const {
    if (i < lo || i > hi) throw ParameterError("window: index outside range");
    return values[static_cast<std::size_t>(i - lo)];
  }
};

// Stationary values for indices lo..hi; deterministic in the seed.
inline StationaryWindow stationary_window_range(const ProcessModel& model,
                                                std::int64_t lo, std::int64_t hi,
                                                std::uint64_t seed) {
  if (lo > hi) throw ParameterError("window: lo must be <= hi");
  StationaryWindow w;
  w.lo = lo;
  w.hi = hi;
  w.seed = seed;
  const std::size_t len = static_cast<std::size_t>(hi - lo + 1);
  w.values.resize(len);
  auto rng = make_engine(seed);

  switch (model.variant()) {
    case ProcessModel::Variant::AndrewsBernoulli: {
      // Exact truncated binary expansion over 64 innovation bits.
      constexpr int kBits = 64;
      std::vector<std::uint8_t> bits(len + kBits - 1);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      for (auto& b : bits) b = u01(rng) < 0.5 ? 1 : 0;
      for (std::size_t i = 0; i < len; ++i) {
        double v = 0.0;
        for (int j = kBits - 1; j >= 0; --j)
          v += static_cast<double>(bits[i + kBits - 1 - static_cast<std::size_t>(j)]) *
               std::ldexp(1.0, -(j + 1));
        w.values[i] = v;
      }
      break;
    }
    case ProcessModel::Variant::CausalLinear: {
      const auto& a = model.expanded_coefficients();
      std::vector<double> eps(len + a.size() - 1);
      for (auto& e : eps) e = model.noise().sample(rng);
      for (std::size_t i = 0; i < len; ++i) {
        double v = 0.0;
        for (std::size_t j = a.size(); j-- > 0;)
          v += a[j] * eps[i + a.size() - 1 - j];
        w.values[i] = v;
      }
      break;
    }
    case ProcessModel::Variant::LinearAr1: {
      const std::int64_t warm = burn_in(model);
      double x = model.marginal_mean();
      for (std::int64_t k = 0; k < warm; ++k)
        x = model.rho() * x + model.noise().sample(rng);
      for (std::size_t i = 0; i < len; ++i) {
        x = model.rho() * x + model.noise().sample(rng);
        w.values[i] = x;
      }
      break;
    }
    case ProcessModel::Variant::IteratedContraction: {
      const std::int64_t warm = burn_in(model);
      const bool affine = model.map() == ProcessModel::Map::Affine;
      double x = model.marginal_mean();
      auto step = [&](double y, double e) {
        return affine ? model.kappa() * y + e : model.kappa() * std::sin(y) + e;
      };
      for (std::int64_t k = 0; k < warm; ++k) x = step(x, model.noise().sample(rng));
      for (std::size_t i = 0; i < len; ++i) {
        x = step(x, model.noise().sample(rng));
        w.values[i] = x;
      }
      break;
    }
  }
  return w;
}

// Two-sided window over [-M, M].
inline StationaryWindow stationary_window(const ProcessModel& model,
                                          std::int64_t M, std::uint64_t seed) {
  if (M < 1) throw ParameterError("stationary_window: M must be >= 1");
  return stationary_window_range(model, -M, M, seed);
}

// Runs the Markov recursion from a fixed start. Two calls with the same
// seed share innovations, which is how coupling distances are measured.
inline double iterate_from(const ProcessModel& model, double x0,
                           std::int64_t steps, std::uint64_t seed) {
  if (steps < 0) throw ParameterError("iterate_from: steps must be >= 0");
  auto rng = make_engine(seed);
  double x = x0;
  switch (model.variant()) {
    case ProcessModel::Variant::AndrewsBernoulli:
      for (std::int64_t k = 0; k < steps; ++k)
        x = 0.5 * (x + model.noise().sample(rng));
      return x;
    case ProcessModel::Variant::LinearAr1:
      for (std::int64_t k = 0; k < steps; ++k)
        x = model.rho() * x + model.noise().sample(rng);
      return x;
    case ProcessModel::Variant::IteratedContraction: {
      const bool affine = model.map() == ProcessModel::Map::Affine;
      for (std::int64_t k = 0; k < steps; ++k) {
        const double e = model.noise().sample(rng);
        x = affine ? model.kappa() * x + e : model.kappa() * std::sin(x) + e;
      }
      return x;
    }
    case ProcessModel::Variant::CausalLinear:
      throw UnsupportedError("iterate_from: causal linear filters are not Markov recursions");
  }
  return x;
}

// Centred observables. The centre is fixed at construction from the
// model's marginal law, so E f = 0 holds by construction.
class Observable {
 public:
  enum class Kind { IdentityCentered, CosineCentered, LipschitzDictionary };

  static Observable identity(const ProcessModel& model) {
    Observable f;
    f.kind_ = Kind::IdentityCentered;
    f.center_ = model.marginal_mean();
    f.lipschitz_ = 1.0;
    return f;
  }

  // cos(2 pi freq x) centred under the marginal. freq = 0 gives the zero
  // observable exactly.
  static Observable cosine(const ProcessModel& model, double frequency) {
    if (frequency < 0.0) throw ParameterError("observable: frequency must be >= 0");
    Observable f;
    f.kind_ = Kind::CosineCentered;
    f.frequency_ = frequency;
    f.lipschitz_ = 2.0 * std::numbers::pi * frequency;
    const double w = 2.0 * std::numbers::pi * frequency;
    if (frequency == 0.0) {
      f.center_ = 1.0;
      return f;
    }
    switch (model.marginal_law()) {
      case MarginalLaw::Uniform01:
        f.center_ = std::sin(w) / w;
        return f;
      case MarginalLaw::Gaussian:
        f.center_ = std::cos(w * model.marginal_mean()) *
                    std::exp(-0.5 * w * w * model.marginal_variance());
        return f;
      case MarginalLaw::Unknown:
        throw UnsupportedError("observable: no analytic centre for this marginal");
    }
    return f;
  }

  // |x - t| centred, with the knot placed at mean + (index-1) * sd.
  static Observable hinge(const ProcessModel& model, int index) {
    Observable f;
    f.kind_ = Kind::LipschitzDictionary;
    f.index_ = index;
    f.lipschitz_ = 1.0;
    const double t = model.marginal_mean() +
                     static_cast<double>(index - 1) * model.marginal_sd();
    f.knot_ = t;
    switch (model.marginal_law()) {
      case MarginalLaw::Uniform01: {
        if (t < 0.0) f.center_ = 0.5 - t;
        else if (t > 1.0) f.center_ = t - 0.5;
        else f.center_ = t * t - t + 0.5;
        return f;
      }
      case MarginalLaw::Gaussian: {
        const double s = model.marginal_sd();
        if (s == 0.0) {
          f.center_ = std::fabs(model.marginal_mean() - t);
          return f;
        }
        const double d = (t - model.marginal_mean()) / s;
        const double pdf = std::exp(-0.5 * d * d) / std::sqrt(2.0 * std::numbers::pi);
        const double cdf = 0.5 * std::erfc(-d / std::sqrt(2.0));
        f.center_ = s * (2.0 * pdf + d * (2.0 * cdf - 1.0));
        return f;
      }
      case MarginalLaw::Unknown:
        throw UnsupportedError("observable: no analytic centre for this marginal");
    }
    return f;
  }

  Kind kind() const { return kind_; }
  double frequency() const { return frequency_; }
  int index() const { return index_; }
  double knot() const { return knot_; }
  double center() const { return center_; }
  double lipschitz_constant() const { return lipschitz_; }
  bool is_zero() const { return kind_ == Kind::CosineCentered && frequency_ == 0.0; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::IdentityCentered:
        return x - center_;
      case Kind::CosineCentered:
        return std::cos(2.0 * std::numbers::pi * frequency_ * x) - center_;
      case Kind::LipschitzDictionary:
        return std::fabs(x - knot_) - center_;
    }
    return 0.0;
  }

 private:
  Kind kind_ = Kind::IdentityCentered;
  double frequency_ = 1.0;
  int index_ = 0;
  double knot_ = 0.0;
  double center_ = 0.0;
  double lipschitz_ = 1.0;
};

namespace detail {

inline double variance_of_observable(const ProcessModel& model,
                                     const Observable& f) {
  switch (f.kind()) {
    case Observable::Kind::IdentityCentered:
      return model.marginal_variance();
    case Observable::Kind::CosineCentered: {
      if (f.is_zero()) return 0.0;
      const double w = 2.0 * std::numbers::pi * f.frequency();
      double second = 0.0;
      switch (model.marginal_law()) {
        case MarginalLaw::Uniform01:
          second = 0.5 * (1.0 + std::sin(2.0 * w) / (2.0 * w));
          break;
        case MarginalLaw::Gaussian:
          second = 0.5 * (1.0 + std::cos(2.0 * w * model.marginal_mean()) *
                                    std::exp(-2.0 * w * w * model.marginal_variance()));
          break;
        case MarginalLaw::Unknown:
          throw UnsupportedError("covariance: no analytic moment for this marginal");
      }
      return second - f.center() * f.center();
    }
    case Observable::Kind::LipschitzDictionary: {
      const double d = model.marginal_mean() - f.knot();
      return model.marginal_variance() + d * d - f.center() * f.center();
    }
  }
  return 0.0;
}

}  // namespace detail

// Analytic lag covariance E(f f o T^lag) for the supported pairs; callers
// fall back to estimate_covariance when this throws UnsupportedError.
inline double covariance(const ProcessModel& model, const Observable& f,
                         std::int64_t lag) {
  if (lag < 0) throw ParameterError("covariance: lag must be >= 0");
  if (f.is_zero()) return 0.0;
  if (lag == 0) return detail::variance_of_observable(model, f);
  if (f.kind() != Observable::Kind::IdentityCentered) {
    if (model.is_iid()) return 0.0;
    throw UnsupportedError("covariance: analytic form only for identity observables");
  }
  switch (model.variant()) {
    case ProcessModel::Variant::AndrewsBernoulli:
      return model.marginal_variance() * std::ldexp(1.0, -static_cast<int>(lag));
    case ProcessModel::Variant::LinearAr1:
      return model.marginal_variance() * std::pow(model.rho(), static_cast<double>(lag));
    case ProcessModel::Variant::IteratedContraction:
      if (model.map() == ProcessModel::Map::Affine)
        return model.marginal_variance() *
               std::pow(model.kappa(), static_cast<double>(lag));
      throw UnsupportedError("covariance: no analytic form for non-affine contractions");
    case ProcessModel::Variant::CausalLinear: {
      const auto& a = model.expanded_coefficients();
      if (static_cast<std::size_t>(lag) >= a.size()) return 0.0;
      double acc = 0.0;
      for (std::size_t j = 0; j + static_cast<std::size_t>(lag) < a.size(); ++j)
        acc += a[j] * a[j + static_cast<std::size_t>(lag)];
      return model.noise().variance() * acc;
    }
  }
  throw UnsupportedError("covariance: unsupported model");
}

struct EstimateResult {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t replicates = 0;
};

// Monte Carlo covariance from independent stationary windows. Because the
// observables are centred exactly, the product average is unbiased.
inline EstimateResult estimate_covariance(const ProcessModel& model,
                                          const Observable& f, std::int64_t lag,
                                          std::int64_t replicates,
                                          std::uint64_t seed,
                                          unsigned threads = 1) {
  if (lag < 0) throw ParameterError("estimate_covariance: lag must be >= 0");
  if (replicates < 100)
    throw ParameterError("estimate_covariance: need at least 100 replicates");
  std::vector<double> products(static_cast<std::size_t>(replicates));
  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    const auto w =
        stationary_window_range(model, 0, lag, derive_seed(seed, r));
    products[r] = f(w.at(0)) * f(w.at(lag));
  });
  double sum = 0.0;
  for (double v : products) sum += v;
  const double mean = sum / static_cast<double>(replicates);
  double ss = 0.0;
  for (double v : products) ss += (v - mean) * (v - mean);
  EstimateResult out;
  out.value = mean;
  out.std_error = std::sqrt(ss / static_cast<double>(replicates - 1) /
                            static_cast<double>(replicates));
  out.replicates = replicates;
  return out;
}

// Monte Carlo estimate of E(f(xi)^2 1{|f(xi)| > threshold}); the defining
// quantity of the uniform-integrability diagnostic.
inline double uniform_integrability_tail(const ProcessModel& model,
                                         const Observable& f, double threshold,
                                         std::int64_t replicates,
                                         std::uint64_t seed,
                                         unsigned threads = 1) {
  if (threshold < 0.0) throw ParameterError("uniform_integrability_tail: threshold >= 0");
  if (replicates < 1) throw ParameterError("uniform_integrability_tail: replicates >= 1");
  std::vector<double> vals(static_cast<std::size_t>(replicates));
  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    const auto w = stationary_window_range(model, 0, 0, derive_seed(seed, r));
    const double y = f(w.at(0));
    vals[r] = std::fabs(y) > threshold ? y * y : 0.0;
  });
  double sum = 0.0;
  for (double v : vals) sum += v;
  return sum / static_cast<double>(replicates);
}

}  // namespace walksum::process
