#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "walksum/process.hpp"
#include "walksum/stats.hpp"

using namespace walksum;
using process::NoiseSpec;
using process::Observable;
using process::ProcessModel;

namespace {

ProcessModel unit_ar1(double rho) {
  // Gaussian noise scaled so the marginal variance is exactly 1.
  return ProcessModel::linear_ar1(
      rho, NoiseSpec::gaussian(0.0, std::sqrt(1.0 - rho * rho)));
}

}  // namespace

TEST(NoiseSpec, Moments) {
  EXPECT_DOUBLE_EQ(NoiseSpec::bernoulli(0.5).mean_value(), 0.5);
  EXPECT_DOUBLE_EQ(NoiseSpec::bernoulli(0.5).variance(), 0.25);
  EXPECT_DOUBLE_EQ(NoiseSpec::gaussian(1.0, 2.0).second_moment(), 5.0);
  EXPECT_DOUBLE_EQ(NoiseSpec::uniform(0.0, 1.0).variance(), 1.0 / 12.0);
  EXPECT_NEAR(NoiseSpec::gaussian(0.0, 1.0).coupling_distance(), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(NoiseSpec::bernoulli(1.2), ParameterError);
  EXPECT_THROW(NoiseSpec::gaussian(0.0, -1.0), ParameterError);
  EXPECT_THROW(NoiseSpec::uniform(1.0, 0.0), ParameterError);
}

TEST(ProcessModel, FactoryValidation) {
  EXPECT_THROW(ProcessModel::linear_ar1(1.0, NoiseSpec::gaussian(0, 1)),
               ParameterError);
  EXPECT_THROW(ProcessModel::iterated_contraction(
                   ProcessModel::Map::Affine, 1.0, NoiseSpec::gaussian(0, 1)),
               ParameterError);
  EXPECT_THROW(ProcessModel::iterated_contraction(
                   ProcessModel::Map::Sine, 0.5, NoiseSpec::gaussian(0, 1)),
               ParameterError);  // needs declared marginals
  EXPECT_THROW(ProcessModel::causal_linear({}, 0.0, NoiseSpec::gaussian(0, 1)),
               ParameterError);
}

TEST(ProcessModel, MarginalMoments) {
  const auto ar = ProcessModel::linear_ar1(0.5, NoiseSpec::gaussian(0.0, 1.0));
  EXPECT_NEAR(ar.marginal_variance(), 4.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(ar.marginal_mean(), 0.0);

  const auto andrews = ProcessModel::andrews_bernoulli();
  EXPECT_DOUBLE_EQ(andrews.marginal_mean(), 0.5);
  EXPECT_DOUBLE_EQ(andrews.marginal_variance(), 1.0 / 12.0);

  // Geometric coefficient tail a_j = 2^{-(j+1)}: sums 1, sum of squares 1/3.
  const auto causal =
      ProcessModel::causal_linear({0.5}, 0.5, NoiseSpec::gaussian(0.0, 1.0));
  EXPECT_NEAR(causal.marginal_mean(), 0.0, 1e-15);
  EXPECT_NEAR(causal.marginal_variance(), 1.0 / 3.0, 1e-12);
}

TEST(StationaryWindow, AndrewsSupportAndDeterminism) {
  const auto model = ProcessModel::andrews_bernoulli();
  const auto w = process::stationary_window(model, 10, 99);
  EXPECT_EQ(w.size(), 21u);
  EXPECT_EQ(w.lo, -10);
  EXPECT_EQ(w.hi, 10);
  for (double v : w.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const auto w2 = process::stationary_window(model, 10, 99);
  EXPECT_EQ(w.values, w2.values);  // bit-exact reproduction
  const auto w3 = process::stationary_window(model, 10, 100);
  EXPECT_NE(w.values, w3.values);
  EXPECT_THROW(process::stationary_window(model, 0, 1), ParameterError);
}

TEST(StationaryWindow, AndrewsMatchesBinaryExpansionOracle) {
  // Oracle: xi = sum_{j=0}^{63} 2^{-(j+1)} eps_{-j} with iid fair bits,
  // generated by an independent implementation. Uniform[0,1] moments.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = 1000000;
  std::vector<double> bits(64 + n);
  for (auto& b : bits) b = u01(rng) < 0.5 ? 1.0 : 0.0;
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    for (int j = 63; j >= 0; --j) v += bits[i + 63 - j] * std::ldexp(1.0, -(j + 1));
    mean += v;
    sq += v * v;
  }
  mean /= n;
  sq /= n;
  EXPECT_NEAR(mean, 0.5, 0.005);
  EXPECT_NEAR(sq - mean * mean, 1.0 / 12.0, 0.01 / 12.0);

  // The model window reproduces the same marginal at matching tolerance.
  const auto model = ProcessModel::andrews_bernoulli();
  const auto w = process::stationary_window_range(model, 0, n - 1, 777);
  const auto m = stats::moments(w.values);
  EXPECT_NEAR(m.mean, 0.5, 0.005);
  EXPECT_NEAR(m.variance, 1.0 / 12.0, 0.01 / 12.0);
}

TEST(StationaryWindow, DeclaredMomentsAcrossCatalog) {
  const std::vector<ProcessModel> models = {
      ProcessModel::andrews_bernoulli(),
      ProcessModel::linear_ar1(0.5, NoiseSpec::gaussian(0.0, 1.0)),
      ProcessModel::causal_linear({1.0, 0.5}, 0.5, NoiseSpec::gaussian(0.0, 1.0)),
      ProcessModel::iterated_contraction(ProcessModel::Map::Affine, 0.3,
                                         NoiseSpec::uniform(-1.0, 1.0)),
  };
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& model = models[i];
    const int n = 200000;
    const auto w = process::stationary_window_range(model, 0, n - 1, 31 + i);
    const auto m = stats::moments(w.values);
    // Dependent draws: allow a long-run inflation factor on the plain
    // 3 sigma/sqrt(n) band.
    const double sd = model.marginal_sd();
    EXPECT_NEAR(m.mean, model.marginal_mean(), 9.0 * sd / std::sqrt(1.0 * n))
        << "model " << i;
    EXPECT_NEAR(m.variance, model.marginal_variance(),
                0.05 * model.marginal_variance())
        << "model " << i;
  }
}

TEST(StationaryWindow, ShiftConsistency) {
  const auto model = unit_ar1(0.5);
  const auto w = process::stationary_window(model, 2000, 5);
  std::vector<double> left(w.values.begin(), w.values.end() - 1);
  std::vector<double> right(w.values.begin() + 1, w.values.end());
  const double d = stats::ks_two_sample(left, right);
  EXPECT_LT(d, stats::ks_two_sample_critical(0.01, left.size(), right.size()));
}

TEST(Covariance, Ar1GeometricDecay) {
  const auto model = unit_ar1(0.5);
  const auto f = Observable::identity(model);
  EXPECT_NEAR(process::covariance(model, f, 3), 0.125, 1e-12);
  EXPECT_NEAR(process::covariance(model, f, 0), 1.0, 1e-12);
}

TEST(Covariance, LagZeroIsMarginalVariance) {
  const auto andrews = ProcessModel::andrews_bernoulli();
  EXPECT_DOUBLE_EQ(
      process::covariance(andrews, Observable::identity(andrews), 0),
      1.0 / 12.0);
  const auto causal =
      ProcessModel::causal_linear({1.0, 0.5}, 0.0, NoiseSpec::gaussian(0.0, 2.0));
  EXPECT_NEAR(process::covariance(causal, Observable::identity(causal), 0),
              causal.marginal_variance(), 1e-12);
}

TEST(Covariance, AndrewsLagOneIsHalfVariance) {
  // The recursion halves covariance per lag: Cov(xi_0, xi_1) = Var/2 = 1/24.
  const auto model = ProcessModel::andrews_bernoulli();
  const auto f = Observable::identity(model);
  EXPECT_NEAR(process::covariance(model, f, 1), 1.0 / 24.0, 1e-15);

  const auto est = process::estimate_covariance(model, f, 1, 200000, 40);
  EXPECT_NEAR(est.value, 1.0 / 24.0, 3.0 * est.std_error);
}

TEST(Covariance, CausalLinearMatchesCoefficientConvolution) {
  const auto model =
      ProcessModel::causal_linear({1.0, 0.5, 0.25}, 0.0, NoiseSpec::gaussian(0.0, 1.0));
  const auto f = Observable::identity(model);
  EXPECT_NEAR(process::covariance(model, f, 1), 1.0 * 0.5 + 0.5 * 0.25, 1e-15);
  EXPECT_NEAR(process::covariance(model, f, 2), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(process::covariance(model, f, 3), 0.0);
}

TEST(Covariance, UnsupportedPairsThrow) {
  const auto model = unit_ar1(0.5);
  EXPECT_THROW(process::covariance(model, Observable::cosine(model, 1.0), 2),
               UnsupportedError);
  const auto sine = ProcessModel::iterated_contraction(
      ProcessModel::Map::Sine, 0.5, NoiseSpec::gaussian(0.0, 1.0), 0.0, 1.4);
  EXPECT_THROW(
      process::covariance(sine, Observable::identity(sine), 1),
      UnsupportedError);
}

TEST(EstimateCovariance, AgreesWithAnalyticValues) {
  const auto model = unit_ar1(0.5);
  const auto f = Observable::identity(model);
  const auto lag1 = process::estimate_covariance(model, f, 1, 100000, 8);
  EXPECT_NEAR(lag1.value, 0.5, 3.0 * lag1.std_error);

  const auto iid = unit_ar1(0.0);
  const auto lag2 =
      process::estimate_covariance(iid, Observable::identity(iid), 2, 100000, 9);
  EXPECT_NEAR(lag2.value, 0.0, 3.0 * lag2.std_error);

  const auto lag0 = process::estimate_covariance(model, f, 0, 100000, 10);
  EXPECT_NEAR(lag0.value, 1.0, 3.0 * lag0.std_error);

  EXPECT_THROW(process::estimate_covariance(model, f, 1, 50, 8), ParameterError);
}

TEST(Covariance, IidLagOneVanishes) {
  // Sample autocovariance at lag 1 of an iid sequence, long window.
  const auto model = unit_ar1(0.0);
  const auto f = Observable::identity(model);
  const int n = 100000;
  const auto w = process::stationary_window_range(model, 0, n, 606);
  double acc = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double prod = f(w.values[i]) * f(w.values[i + 1]);
    acc += prod;
    sq += prod * prod;
  }
  const double mean = acc / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, 0.0, 3.0 * se);
}

TEST(Covariance, Ar1DecayAcrossLags) {
  const auto model = unit_ar1(0.5);
  const auto f = Observable::identity(model);
  for (std::int64_t lag = 1; lag <= 10; ++lag) {
    const auto est = process::estimate_covariance(model, f, lag, 20000, 60 + lag);
    EXPECT_NEAR(est.value, std::pow(0.5, static_cast<double>(lag)),
                3.0 * est.std_error)
        << "lag " << lag;
  }
}

TEST(UniformIntegrabilityTail, MonotoneInThreshold) {
  // Same seed, shrinking indicator: exact monotonicity.
  const auto model = unit_ar1(0.5);
  const auto f = Observable::identity(model);
  double prev = process::uniform_integrability_tail(model, f, 0.0, 5000, 12);
  for (double m : {0.5, 1.0, 2.0, 4.0}) {
    const double cur = process::uniform_integrability_tail(model, f, m, 5000, 12);
    EXPECT_LE(cur, prev);
    prev = cur;
  }
}

TEST(UniformIntegrabilityTail, BoundedObservableVanishes) {
  const auto model = ProcessModel::andrews_bernoulli();
  const auto f = Observable::identity(model);  // |f| <= 1/2
  EXPECT_DOUBLE_EQ(process::uniform_integrability_tail(model, f, 1.0, 2000, 3),
                   0.0);
}

TEST(UniformIntegrabilityTail, ZeroThresholdGivesSecondMoment) {
  const auto model = unit_ar1(0.5);
  const auto f = Observable::identity(model);
  const double full = process::uniform_integrability_tail(model, f, 0.0, 100000, 4);
  EXPECT_NEAR(full, 1.0, 0.05);
}

TEST(UniformIntegrabilityTail, GaussianTailIsTiny) {
  // Marginal sd 1; the mass above 10 sd is far below 1e-3.
  const auto model = unit_ar1(0.5);
  const auto f = Observable::identity(model);
  EXPECT_LT(process::uniform_integrability_tail(model, f, 10.0, 100000, 5), 1e-3);
}

TEST(Observable, CentersAreAnalytic) {
  const auto andrews = ProcessModel::andrews_bernoulli();
  const auto hinge = Observable::hinge(andrews, 1);  // knot at the mean
  EXPECT_DOUBLE_EQ(hinge.knot(), 0.5);
  EXPECT_DOUBLE_EQ(hinge.center(), 0.25);  // E|U - 1/2|

  const auto gauss = unit_ar1(0.3);
  const auto gauss_hinge = Observable::hinge(gauss, 1);
  EXPECT_NEAR(gauss_hinge.center(), std::sqrt(2.0 / std::numbers::pi), 1e-12);

  const auto cosine = Observable::cosine(gauss, 1.0);
  const double w = 2.0 * std::numbers::pi;
  EXPECT_NEAR(cosine.center(), std::exp(-0.5 * w * w), 1e-15);
  EXPECT_NEAR(cosine.lipschitz_constant(), w, 1e-15);
}

TEST(Observable, ZeroObservable) {
  const auto model = ProcessModel::andrews_bernoulli();
  const auto zero = Observable::cosine(model, 0.0);
  EXPECT_TRUE(zero.is_zero());
  EXPECT_DOUBLE_EQ(zero(0.3), 0.0);
  EXPECT_DOUBLE_EQ(zero(-5.0), 0.0);
}

TEST(Observable, MeanZeroOnLongWindow) {
  const auto model = ProcessModel::andrews_bernoulli();
  const std::vector<Observable> fs = {Observable::identity(model),
                                      Observable::cosine(model, 1.0),
                                      Observable::hinge(model, 1)};
  const auto w = process::stationary_window_range(model, 0, 299999, 21);
  for (const auto& f : fs) {
    double acc = 0.0;
    for (double v : w.values) acc += f(v);
    EXPECT_NEAR(acc / static_cast<double>(w.size()), 0.0, 0.01);
  }
}

TEST(IterateFrom, SharedNoiseCouplesChains) {
  const auto model = unit_ar1(0.5);
  const double a = process::iterate_from(model, 1.0, 10, 404);
  const double b = process::iterate_from(model, 3.0, 10, 404);
  EXPECT_NEAR(a - b, std::pow(0.5, 10) * (1.0 - 3.0), 1e-12);
}
