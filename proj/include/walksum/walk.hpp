#pragma once

// Transient integer random walks: path sampling, local times,
// self-intersection counts and Green function tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "walksum/core.hpp"

namespace walksum::walk {

// Finite-support step distribution on the integers. Transience is
// equivalent to a nonzero mean here (the absolute mean is always finite).
class StepLaw {
 public:
  StepLaw(std::vector<std::int64_t> support, std::vector<double> probabilities)
      : support_(std::move(support)), probs_(std::move(probabilities)) {
    if (support_.empty() || support_.size() != probs_.size())
      throw ParameterError("step law: support and probabilities must be non-empty and equal length");
    double total = 0.0;
    for (double p : probs_) {
      if (p < 0.0) throw ParameterError("step law: negative probability");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw ParameterError("step law: probabilities must sum to 1");
    cumulative_.resize(probs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      acc += probs_[i];
      cumulative_[i] = acc;
      mean_ += static_cast<double>(support_[i]) * probs_[i];
      mean_abs_ += std::fabs(static_cast<double>(support_[i])) * probs_[i];
    }
    cumulative_.back() = 1.0;
  }

  // Shorthand: +1 with probability p, -1 with probability 1-p.
  static StepLaw nearest_neighbour(double p) {
    if (p < 0.0 || p > 1.0) throw ParameterError("nearest neighbour: p must lie in [0,1]");
    return StepLaw({1, -1}, {p, 1.0 - p});
  }

  // Shorthand: deterministic step of size d.
  static StepLaw deterministic(std::int64_t d) { return StepLaw({d}, {1.0}); }

  const std::vector<std::int64_t>& support() const { return support_; }
  const std::vector<double>& probabilities() const { return probs_; }
  double mean() const { return mean_; }
  double mean_abs() const { return mean_abs_; }
  bool transient() const { return std::fabs(mean_) > 1e-15; }

  bool is_nearest_neighbour() const {
    return support_.size() == 2 &&
           ((support_[0] == 1 && support_[1] == -1) ||
            (support_[0] == -1 && support_[1] == 1));
  }
  bool is_deterministic() const {
    if (support_.size() == 1) return true;
    int live = 0;
    for (double p : probs_) live += (p > 0.0);
    return live == 1;
  }
  // Probability of +1 for a nearest-neighbour law.
  double up_probability() const {
    if (!is_nearest_neighbour()) throw UnsupportedError("not a nearest-neighbour law");
    return support_[0] == 1 ? probs_[0] : probs_[1];
  }
  double probability_of(std::int64_t x) const {
    for (std::size_t i = 0; i < support_.size(); ++i)
      if (support_[i] == x) return probs_[i];
    return 0.0;
  }
  // Support reflected through the origin; used to reduce negative-drift
  // laws to the positive-drift closed forms.
  StepLaw reflected() const {
    std::vector<std::int64_t> s(support_);
    for (auto& x : s) x = -x;
    return StepLaw(std::move(s), probs_);
  }

  std::int64_t sample(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t i = 0; i + 1 < cumulative_.size(); ++i)
      if (u < cumulative_[i]) return support_[i];
    return support_.back();
  }

 private:
  std::vector<std::int64_t> support_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double mean_ = 0.0;
  double mean_abs_ = 0.0;
};

struct WalkPath {
  std::int64_t n = 0;                     // number of steps
  std::vector<std::int64_t> positions;    // S_0 .. S_n, S_0 = 0
  std::uint64_t seed = 0;
};

// Samples S_0..S_n with iid increments. Recurrent (zero-mean) laws are
// rejected unless explicitly overridden, since every downstream limit
// statement assumes transience.
inline WalkPath sample_path(const StepLaw& law, std::int64_t n,
                            std::uint64_t seed, bool allow_recurrent = false) {
  if (n < 0) throw ParameterError("sample_path: n must be >= 0");
  if (!law.transient() && !allow_recurrent)
    throw TransienceError("step law has zero mean: walk is not transient");
  WalkPath path;
  path.n = n;
  path.seed = seed;
  path.positions.resize(static_cast<std::size_t>(n) + 1);
  path.positions[0] = 0;
  auto rng = make_engine(seed);
  std::int64_t s = 0;
  for (std::int64_t k = 1; k <= n; ++k) {
    s += law.sample(rng);
    path.positions[static_cast<std::size_t>(k)] = s;
  }
  return path;
}

// Occupation counts N_n(x) stored sparsely over the visited sites.
class LocalTimeField {
 public:
  static LocalTimeField from_positions(std::span<const std::int64_t> positions) {
    if (positions.empty()) throw ParameterError("local time: empty path");
    LocalTimeField f;
    f.n_ = static_cast<std::int64_t>(positions.size()) - 1;
    f.min_ = std::numeric_limits<std::int64_t>::max();
    f.max_ = std::numeric_limits<std::int64_t>::min();
    f.counts_.reserve(positions.size());
    for (std::int64_t x : positions) {
      ++f.counts_[x];
      f.min_ = std::min(f.min_, x);
      f.max_ = std::max(f.max_, x);
    }
    for (const auto& [x, c] : f.counts_) {
      f.max_count_ = std::max(f.max_count_, c);
      f.max_abs_ = std::max(f.max_abs_, static_cast<std::int64_t>(std::llabs(x)));
    }
    return f;
  }

  static LocalTimeField from_path(const WalkPath& path) {
    return from_positions(path.positions);
  }

  std::int64_t n() const { return n_; }
  std::int64_t count(std::int64_t x) const {
    auto it = counts_.find(x);
    return it == counts_.end() ? 0 : it->second;
  }
  std::int64_t total() const { return n_ + 1; }
  std::int64_t min_position() const { return min_; }
  std::int64_t max_position() const { return max_; }
  std::int64_t max_abs_position() const { return max_abs_; }  // M_n
  std::int64_t max_count() const { return max_count_; }
  std::size_t distinct_sites() const { return counts_.size(); }
  const std::unordered_map<std::int64_t, std::int64_t>& table() const {
    return counts_;
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> sorted_counts() const {
    std::vector<std::pair<std::int64_t, std::int64_t>> out(counts_.begin(),
                                                           counts_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  // Dense copy over [min_position, max_position]; unvisited sites are 0.
  std::vector<std::int64_t> dense() const {
    std::vector<std::int64_t> d(static_cast<std::size_t>(max_ - min_ + 1), 0);
    for (const auto& [x, c] : counts_) d[static_cast<std::size_t>(x - min_)] = c;
    return d;
  }

 private:
  std::int64_t n_ = 0;
  std::int64_t min_ = 0;
  std::int64_t max_ = 0;
  std::int64_t max_abs_ = 0;
  std::int64_t max_count_ = 0;
  std::unordered_map<std::int64_t, std::int64_t> counts_;
};

inline LocalTimeField local_time(const WalkPath& path) {
  return LocalTimeField::from_path(path);
}

// alpha(n,x) = sum_y N_n(y+x) N_n(y); symmetric in x.
inline std::int64_t self_intersection(const LocalTimeField& field,
                                      std::int64_t x) {
  const std::int64_t shift = static_cast<std::int64_t>(std::llabs(x));
  const std::int64_t range = field.max_position() - field.min_position() + 1;
  if (shift >= range) return 0;
  const auto dense = field.dense();
  std::int64_t acc = 0;
  for (std::size_t y = 0; y + static_cast<std::size_t>(shift) < dense.size(); ++y)
    acc += dense[y] * dense[y + static_cast<std::size_t>(shift)];
  return acc;
}

// alpha(n,z) for z = 0..z_max in one pass over a dense buffer.
inline std::vector<std::int64_t> self_intersection_profile(
    const LocalTimeField& field, std::int64_t z_max) {
  if (z_max < 0) throw ParameterError("self_intersection_profile: z_max >= 0");
  const auto dense = field.dense();
  std::vector<std::int64_t> out(static_cast<std::size_t>(z_max) + 1, 0);
  for (std::int64_t z = 0; z <= z_max; ++z) {
    if (static_cast<std::size_t>(z) >= dense.size()) break;
    std::int64_t acc = 0;
    for (std::size_t y = 0; y + static_cast<std::size_t>(z) < dense.size(); ++y)
      acc += dense[y] * dense[y + static_cast<std::size_t>(z)];
    out[static_cast<std::size_t>(z)] = acc;
  }
  return out;
}

// Expected number of visits to each site of [lo, hi], started from 0.
struct GreenTable {
  enum class Method { ExactNearestNeighbour, ExactDeterministic, MonteCarlo };

  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::vector<double> values;
  std::vector<double> std_errors;  // populated by the Monte Carlo estimator
  Method method = Method::MonteCarlo;
  double truncation_bound = 0.0;   // residual mass per entry beyond K steps
  std::int64_t truncation_k = 0;
  std::int64_t replicates = 0;

  bool contains(std::int64_t x) const { return x >= lo && x <= hi; }
  double at(std::int64_t x) const {
    if (!contains(x)) throw ParameterError("green table: x outside stored range");
    return values[static_cast<std::size_t>(x - lo)];
  }
  double std_error(std::int64_t x) const {
    if (std_errors.empty()) return 0.0;
    if (!contains(x)) throw ParameterError("green table: x outside stored range");
    return std_errors[static_cast<std::size_t>(x - lo)];
  }
  double max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

namespace detail {

// Drifted nearest-neighbour closed form, p > q:
// G(0,x) = 1/(p-q) for x >= 0 and (q/p)^{|x|}/(p-q) for x < 0.
inline double green_nn_positive_drift(double p, std::int64_t x) {
  const double q = 1.0 - p;
  const double base = 1.0 / (p - q);
  if (x >= 0) return base;
  return base * std::pow(q / p, static_cast<double>(-x));
}

}  // namespace detail

// Exact tables for the supported laws: drifted nearest-neighbour walks and
// deterministic single-point laws. Negative drift is handled by reflection.
inline GreenTable green_exact(const StepLaw& law, std::int64_t lo,
                              std::int64_t hi) {
  if (lo > hi) throw ParameterError("green_exact: empty range");
  GreenTable table;
  table.lo = lo;
  table.hi = hi;
  table.values.resize(static_cast<std::size_t>(hi - lo + 1), 0.0);

  if (law.is_deterministic()) {
    std::int64_t d = 0;
    for (std::size_t i = 0; i < law.support().size(); ++i)
      if (law.probabilities()[i] > 0.0) d = law.support()[i];
    if (d == 0) throw UnsupportedError("green_exact: zero step is recurrent");
    table.method = GreenTable::Method::ExactDeterministic;
    for (std::int64_t x = lo; x <= hi; ++x) {
      const bool on_orbit = (d > 0) ? (x >= 0 && x % d == 0) : (x <= 0 && x % d == 0);
      table.values[static_cast<std::size_t>(x - lo)] = on_orbit ? 1.0 : 0.0;
    }
    return table;
  }

  if (law.is_nearest_neighbour()) {
    const double p = law.up_probability();
    const double q = 1.0 - p;
    if (std::fabs(p - q) <= 1e-15)
      throw UnsupportedError("green_exact: symmetric nearest-neighbour walk is recurrent");
    table.method = GreenTable::Method::ExactNearestNeighbour;
    for (std::int64_t x = lo; x <= hi; ++x) {
      const double value = p > q ? detail::green_nn_positive_drift(p, x)
                                 : detail::green_nn_positive_drift(q, -x);
      table.values[static_cast<std::size_t>(x - lo)] = value;
    }
    return table;
  }

  throw UnsupportedError("green_exact: no closed form for this step law");
}

namespace detail {

// Residual of the truncated series: sum_{k>K} P(S_k in [lo,hi]) is bounded
// through the moment generating function on a fixed grid of exponents.
inline double green_truncation_bound(const StepLaw& law, std::int64_t lo,
                                     std::int64_t hi, std::int64_t k_max) {
  const bool positive_drift = law.mean() > 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 200; ++j) {
    const double t = 0.05 * j;
    double r = 0.0;
    for (std::size_t i = 0; i < law.support().size(); ++i) {
      const double x = static_cast<double>(law.support()[i]);
      r += law.probabilities()[i] * std::exp(positive_drift ? -t * x : t * x);
    }
    if (r >= 1.0) continue;
    const double edge = positive_drift ? static_cast<double>(hi)
                                       : static_cast<double>(-lo);
    const double log_bound = t * edge +
                             static_cast<double>(k_max + 1) * std::log(r) -
                             std::log1p(-r);
    best = std::min(best, std::exp(log_bound));
  }
  return best;
}

}  // namespace detail

// Monte Carlo estimate of the truncated series sum_{k<=K} P(S_k = x) over
// [lo, hi], from R independent paths. Per-replicate seeds follow the
// documented derivation rule, so the result is thread-count independent.
inline GreenTable green_mc(const StepLaw& law, std::int64_t lo, std::int64_t hi,
                           std::int64_t truncation_k, std::int64_t replicates,
                           std::uint64_t seed, unsigned threads = 1) {
  if (lo > hi) throw ParameterError("green_mc: empty range");
  if (truncation_k < 1 || replicates < 1)
    throw ParameterError("green_mc: truncation and replicates must be >= 1");
  if (!law.transient()) throw TransienceError("green_mc: law must be transient");

  const std::size_t width = static_cast<std::size_t>(hi - lo + 1);
  std::vector<std::uint32_t> visits(static_cast<std::size_t>(replicates) * width, 0);

  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    auto rng = make_engine(derive_seed(seed, r));
    std::uint32_t* row = visits.data() + r * width;
    std::int64_t s = 0;
    if (s >= lo && s <= hi) ++row[static_cast<std::size_t>(s - lo)];
    for (std::int64_t k = 1; k <= truncation_k; ++k) {
      s += law.sample(rng);
      if (s >= lo && s <= hi) ++row[static_cast<std::size_t>(s - lo)];
    }
  });

  GreenTable table;
  table.lo = lo;
  table.hi = hi;
  table.method = GreenTable::Method::MonteCarlo;
  table.truncation_k = truncation_k;
  table.replicates = replicates;
  table.values.assign(width, 0.0);
  table.std_errors.assign(width, 0.0);

  // Ordered reduction in replicate index order.
  std::vector<double> sum(width, 0.0), sum_sq(width, 0.0);
  for (std::int64_t r = 0; r < replicates; ++r) {
    const std::uint32_t* row = visits.data() + static_cast<std::size_t>(r) * width;
    for (std::size_t i = 0; i < width; ++i) {
      const double v = static_cast<double>(row[i]);
      sum[i] += v;
      sum_sq[i] += v * v;
    }
  }
  const double n = static_cast<double>(replicates);
  for (std::size_t i = 0; i < width; ++i) {
    table.values[i] = sum[i] / n;
    if (replicates > 1) {
      const double var = std::max(0.0, (sum_sq[i] - sum[i] * sum[i] / n) / (n - 1.0));
      table.std_errors[i] = std::sqrt(var / n);
    }
  }
  table.truncation_bound = detail::green_truncation_bound(law, lo, hi, truncation_k);
  return table;
}

}  // namespace walksum::walk
