#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "walksum/harness.hpp"
#include "walksum/stats.hpp"
#include "walksum/variance.hpp"
#include "walksum/walk.hpp"

using namespace walksum;
using harness::KnRule;
using harness::TriangularSpec;
using harness::WeightRule;
using process::NoiseSpec;
using process::Observable;
using process::ProcessModel;
using walk::StepLaw;

namespace {

ProcessModel unit_ar1(double rho) {
  return ProcessModel::linear_ar1(
      rho, NoiseSpec::gaussian(0.0, std::sqrt(1.0 - rho * rho)));
}

TriangularSpec iid_equal_spec() {
  const auto model = unit_ar1(0.0);
  return {model, Observable::identity(model), WeightRule::equal(),
          KnRule::linear()};
}

}  // namespace

TEST(NormalityTests, CalibratedOnTargetNormal) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0));
  std::vector<double> xs(5000);
  for (auto& x : xs) x = normal(rng);
  const auto r = harness::normality_tests(xs, 2.0);
  EXPECT_LT(r.ks, r.ks_critical_1pct);
  EXPECT_LT(std::fabs(r.skewness_z), 4.0);
  EXPECT_LT(std::fabs(r.kurtosis_z), 4.0);
}

TEST(NormalityTests, PowerAgainstExponential) {
  // Numeric-CDF oracle: sup_x |F_exp(x) - Phi(x)| is attained at the left
  // support edge, Phi(-1) = 0.158655...
  double oracle = 0.0;
  for (double x = -1.0; x <= 8.0; x += 1e-4) {
    const double f_exp = x < -1.0 ? 0.0 : 1.0 - std::exp(-(x + 1.0));
    oracle = std::max(oracle, std::fabs(f_exp - stats::normal_cdf(x)));
  }
  EXPECT_NEAR(oracle, 0.15865525393145707, 1e-4);

  std::mt19937_64 rng(2);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = expo(rng) - 1.0;
  const auto r = harness::normality_tests(xs, 1.0);
  EXPECT_GT(r.ks, r.ks_critical_1pct);
  EXPECT_NEAR(r.ks, oracle, 0.02);
}

TEST(NormalityTests, DegenerateSamples) {
  std::vector<double> xs(500, 1.0);
  EXPECT_THROW(harness::normality_tests(xs, 1.0), DegenerateError);
  std::vector<double> few(10, 0.0);
  EXPECT_THROW(harness::normality_tests(few, 1.0), ParameterError);
}

TEST(RunTriangular, ClassicalCltPassesKs) {
  const auto report = harness::run_triangular(iid_equal_spec(), 10000, 5000, 11, 4);
  EXPECT_LT(report.normality.ks, report.normality.ks_critical_1pct);
  EXPECT_NEAR(report.empirical_variance, 1.0, 0.1);
  EXPECT_NEAR(report.a1_i_ratio, 1.0, 1e-9);  // iid: sigma_n^2 = sum a^2
  EXPECT_TRUE(report.flags.empty());
}

TEST(RunTriangular, SingleWeightFlagsConcentration) {
  const auto model = unit_ar1(0.0);
  TriangularSpec spec{model, Observable::identity(model),
                      WeightRule::single_site(), KnRule::linear()};
  const auto report = harness::run_triangular(spec, 500, 500, 3);
  EXPECT_NEAR(report.a1_ii_ratio, 1.0, 1e-12);  // max|a| / sigma_n = 1/sqrt(c0)
  ASSERT_FALSE(report.flags.empty());
  EXPECT_EQ(report.flags[0], "weight-concentration");
}

TEST(RunTriangular, Ar1LongRunVariance) {
  // Unnormalized variance per unit weight mass approaches
  // (1+rho)/(1-rho) * marginal variance = 3.
  const auto model = unit_ar1(0.5);
  TriangularSpec spec{model, Observable::identity(model), WeightRule::equal(),
                      KnRule::fixed_k(2000)};
  const auto report = harness::run_triangular(spec, 2000, 5000, 21, 4);
  EXPECT_NEAR(report.unnormalized_variance / report.sum_weights_sq, 3.0,
              0.05 * 3.0);
  EXPECT_LT(report.normality.ks, report.normality.ks_critical_1pct);
}

TEST(RunTriangular, CustomWeightsVarianceMatchesDirectSum) {
  const auto model = unit_ar1(0.5);
  TriangularSpec spec{model, Observable::identity(model),
                      WeightRule::custom_weights({1.0, 2.0, 0.5, -1.0, 0.25}),
                      KnRule::fixed_k(2)};
  const auto report = harness::run_triangular(spec, 100, 200, 5);
  double direct = 0.0;
  const std::vector<double> w = {1.0, 2.0, 0.5, -1.0, 0.25};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      direct += w[i] * w[j] * std::pow(0.5, std::abs(i - j));
  EXPECT_NEAR(report.sigma_n2, direct, 1e-9);
}

TEST(RunSampled, MartingaleVarianceMatchesGreenFactor) {
  // iid process on the drifted walk: limit variance 1.5 * E f^2.
  const auto model = unit_ar1(0.0);
  const auto report = harness::run_sampled(
      model, Observable::identity(model), StepLaw::nearest_neighbour(0.9), 2000,
      1000, kDefaultPathSeed, 52, 4);
  EXPECT_NEAR(report.target_variance, 1.5, 1e-9);
  EXPECT_NEAR(report.empirical_variance, 1.5, 0.25);
}

TEST(RunSampled, ReplicateVarianceMatchesQuenchedForm) {
  // The replicate sums are exactly Gaussian here, so the empirical
  // variance concentrates around sigma_n^2(f)/n at the chi-square rate.
  const auto model = unit_ar1(0.5);
  const std::int64_t reps = 2000;
  const auto report = harness::run_sampled(
      model, Observable::identity(model), StepLaw::nearest_neighbour(0.75), 1000,
      reps, 7, 8, 4);
  const double se =
      report.sigma_n2 * std::sqrt(2.0 / static_cast<double>(reps - 1));
  EXPECT_NEAR(report.empirical_variance, report.sigma_n2, 3.0 * se);
}

TEST(RunSampled, WeightMassIsAlphaOverN) {
  const auto model = unit_ar1(0.0);
  const auto report = harness::run_sampled(
      model, Observable::identity(model), StepLaw::nearest_neighbour(0.8), 500,
      200, 9, 10);
  const auto path = walk::sample_path(StepLaw::nearest_neighbour(0.8), 500, 9);
  const auto field = walk::local_time(path);
  const double alpha0 = static_cast<double>(walk::self_intersection(field, 0));
  EXPECT_DOUBLE_EQ(report.sum_weights_sq, alpha0 / 500.0);
  EXPECT_DOUBLE_EQ(report.alpha0_over_n, alpha0 / 500.0);
}

TEST(RunSampled, QuenchedDeterminism) {
  const auto model = unit_ar1(0.5);
  const auto a = harness::run_sampled(model, Observable::identity(model),
                                      StepLaw::nearest_neighbour(0.75), 300, 200,
                                      41, 42);
  const auto b = harness::run_sampled(model, Observable::identity(model),
                                      StepLaw::nearest_neighbour(0.75), 300, 200,
                                      41, 42, 4);
  EXPECT_EQ(a.samples, b.samples);  // bit-identical across thread counts
  EXPECT_DOUBLE_EQ(a.normality.ks, b.normality.ks);
  const auto c = harness::run_sampled(model, Observable::identity(model),
                                      StepLaw::nearest_neighbour(0.75), 300, 200,
                                      43, 42);
  EXPECT_NE(a.samples, c.samples);
}

TEST(RunSampled, ErrorPaths) {
  const auto model = unit_ar1(0.5);
  EXPECT_THROW(harness::run_sampled(model, Observable::identity(model),
                                    StepLaw::nearest_neighbour(0.5), 100, 200, 1, 2),
               TransienceError);
  EXPECT_THROW(harness::run_sampled(model, Observable::cosine(model, 0.0),
                                    StepLaw::nearest_neighbour(0.9), 100, 200, 1, 2),
               DegenerateError);
}

TEST(RunSampled, WeightRatioDecreasesAlongGrid) {
  // max_x N_n(x)/sigma_n(f) falls as n grows on a drifted walk.
  const auto model = unit_ar1(0.5);
  const auto cov = variance::analytic_covariance(model, Observable::identity(model));
  const auto path = walk::sample_path(StepLaw::nearest_neighbour(0.9), 100000,
                                      kDefaultPathSeed);
  std::vector<double> ratios;
  for (std::int64_t n : {1000, 10000, 100000}) {
    const auto field = walk::LocalTimeField::from_positions(
        std::span<const std::int64_t>(path.positions)
            .first(static_cast<std::size_t>(n) + 1));
    const double sigma_n2 = variance::sigma_n_empirical(field, cov);
    ratios.push_back(static_cast<double>(field.max_count()) /
                     std::sqrt(sigma_n2));
  }
  EXPECT_LT(ratios.back(), ratios.front());
}

TEST(Lindeberg, BoundedObservableIsExactlyZero) {
  // |f| <= 1/2 while the truncation level far exceeds the largest term.
  const auto model = ProcessModel::andrews_bernoulli();
  TriangularSpec spec{model, Observable::identity(model), WeightRule::equal(),
                      KnRule::fixed_k(100)};
  EXPECT_DOUBLE_EQ(harness::lindeberg_diagnostic(spec, 100, 0.5, 200, 31), 0.0);
}

TEST(Lindeberg, GaussianEqualWeightsIsTiny) {
  const auto report =
      harness::lindeberg_diagnostic(iid_equal_spec(), 10000, 0.1, 200, 32, 4);
  EXPECT_LT(report, 1e-3);
}

TEST(Lindeberg, SingleWeightIsOrderOne) {
  const auto model = unit_ar1(0.0);
  TriangularSpec spec{model, Observable::identity(model),
                      WeightRule::single_site(), KnRule::fixed_k(50)};
  const double value = harness::lindeberg_diagnostic(spec, 50, 0.1, 20000, 33);
  EXPECT_GT(value, 0.5);
}
