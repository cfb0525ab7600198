#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "walksum/core.hpp"
#include "walksum/walk.hpp"

using namespace walksum;
using walk::LocalTimeField;
using walk::StepLaw;

namespace {

// Brute-force pair-count oracle: alpha(n,z) = #{(i,j) : S_i - S_j = z}.
std::map<std::int64_t, std::int64_t> alpha_brute(
    const std::vector<std::int64_t>& pos) {
  std::map<std::int64_t, std::int64_t> counts;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = 0; j < pos.size(); ++j) ++counts[pos[i] - pos[j]];
  return counts;
}

}  // namespace

TEST(StepLaw, Validation) {
  EXPECT_THROW(StepLaw({1, 2}, {0.5}), ParameterError);
  EXPECT_THROW(StepLaw({1}, {-1.0}), ParameterError);
  EXPECT_THROW(StepLaw({1, 2}, {0.5, 0.6}), ParameterError);
  EXPECT_THROW(StepLaw::nearest_neighbour(1.5), ParameterError);
}

TEST(StepLaw, Moments) {
  const auto law = StepLaw::nearest_neighbour(0.9);
  EXPECT_NEAR(law.mean(), 0.8, 1e-15);
  EXPECT_NEAR(law.mean_abs(), 1.0, 1e-15);
  EXPECT_TRUE(law.transient());
  EXPECT_FALSE(StepLaw::nearest_neighbour(0.5).transient());
  EXPECT_TRUE(StepLaw::deterministic(-2).transient());
}

TEST(SamplePath, DeterministicWalks) {
  const auto path = walk::sample_path(StepLaw::deterministic(1), 5, 7);
  const std::vector<std::int64_t> expected = {0, 1, 2, 3, 4, 5};
  EXPECT_EQ(path.positions, expected);

  const auto nn_sure = walk::sample_path(StepLaw::nearest_neighbour(1.0), 5, 7);
  EXPECT_EQ(nn_sure.positions, expected);
}

TEST(SamplePath, RejectsRecurrentWithoutOverride) {
  const auto law = StepLaw::nearest_neighbour(0.5);
  EXPECT_THROW(walk::sample_path(law, 10, 1), TransienceError);
  EXPECT_NO_THROW(walk::sample_path(law, 10, 1, /*allow_recurrent=*/true));
}

TEST(SamplePath, SeedDeterminism) {
  const auto law = StepLaw::nearest_neighbour(0.7);
  const auto a = walk::sample_path(law, 1000, 42);
  const auto b = walk::sample_path(law, 1000, 42);
  const auto c = walk::sample_path(law, 1000, 43);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_NE(a.positions, c.positions);
}

TEST(SamplePath, LawOfLargeNumbers) {
  // mean step 2p-1 = 0.8, step sd 0.6.
  const std::int64_t n = 100000;
  const auto path = walk::sample_path(StepLaw::nearest_neighbour(0.9), n, 2024);
  const double end = static_cast<double>(path.positions.back());
  const double se = 0.6 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(end / static_cast<double>(n), 0.8, 3.0 * se);
}

TEST(LocalTime, HandEnumeratedPath) {
  const std::vector<std::int64_t> pos = {0, 1, 0, 1, 2};
  const auto field = LocalTimeField::from_positions(pos);
  EXPECT_EQ(field.count(0), 2);
  EXPECT_EQ(field.count(1), 2);
  EXPECT_EQ(field.count(2), 1);
  EXPECT_EQ(field.count(5), 0);
  EXPECT_EQ(field.total(), 5);
  EXPECT_EQ(field.max_abs_position(), 2);
  EXPECT_EQ(field.max_count(), 2);
}

TEST(LocalTime, UnitStepsOccupyInterval) {
  const auto path = walk::sample_path(StepLaw::deterministic(1), 50, 1);
  const auto field = walk::local_time(path);
  for (std::int64_t x = 0; x <= 50; ++x) EXPECT_EQ(field.count(x), 1);
  EXPECT_EQ(field.total(), 51);
}

TEST(LocalTime, CountsSumToPathLength) {
  const std::vector<StepLaw> laws = {
      StepLaw::nearest_neighbour(0.8), StepLaw::deterministic(2),
      StepLaw({-1, 2}, {0.3, 0.7}), StepLaw::nearest_neighbour(0.3)};
  for (std::size_t l = 0; l < laws.size(); ++l) {
    const auto path = walk::sample_path(laws[l], 400, 100 + l);
    const auto field = walk::local_time(path);
    std::int64_t sum = 0;
    for (const auto& [x, c] : field.table()) sum += c;
    EXPECT_EQ(sum, 401);
  }
}

TEST(SelfIntersection, HandEnumeratedPath) {
  const std::vector<std::int64_t> pos = {0, 1, 0, 1, 2};
  const auto field = LocalTimeField::from_positions(pos);
  EXPECT_EQ(walk::self_intersection(field, 0), 9);   // 2^2 + 2^2 + 1
  EXPECT_EQ(walk::self_intersection(field, 1), 6);   // N(1)N(0) + N(2)N(1)
  EXPECT_EQ(walk::self_intersection(field, -1), 6);
  const auto oracle = alpha_brute(pos);
  EXPECT_EQ(walk::self_intersection(field, 0), oracle.at(0));
  EXPECT_EQ(walk::self_intersection(field, 1), oracle.at(1));
}

TEST(SelfIntersection, UnitWalkClosedForm) {
  const auto path = walk::sample_path(StepLaw::deterministic(1), 30, 3);
  const auto field = walk::local_time(path);
  for (std::int64_t x = 0; x <= 30; ++x)
    EXPECT_EQ(walk::self_intersection(field, x), 31 - x);
  EXPECT_EQ(walk::self_intersection(field, 31), 0);
}

TEST(SelfIntersection, MatchesBruteForceOnRandomPaths) {
  const std::vector<StepLaw> laws = {StepLaw::nearest_neighbour(0.75),
                                     StepLaw({-1, 2}, {0.4, 0.6}),
                                     StepLaw::deterministic(-2)};
  for (std::size_t l = 0; l < laws.size(); ++l) {
    const auto path = walk::sample_path(laws[l], 300, 7 + l);
    const auto field = walk::local_time(path);
    const auto oracle = alpha_brute(path.positions);
    const auto profile = walk::self_intersection_profile(field, 20);
    for (std::int64_t z = 0; z <= 20; ++z) {
      const auto it = oracle.find(z);
      const std::int64_t want = it == oracle.end() ? 0 : it->second;
      EXPECT_EQ(profile[static_cast<std::size_t>(z)], want) << "z=" << z;
      EXPECT_EQ(walk::self_intersection(field, -z), want) << "symmetry z=" << z;
    }
  }
}

TEST(SelfIntersection, PerStepRatioNearTwoGreenMinusOne) {
  // Single documented path: alpha(n,0)/n settles near 2 G(0,0) - 1 = 1.5.
  const std::int64_t n = 100000;
  const auto path = walk::sample_path(StepLaw::nearest_neighbour(0.9), n,
                                      kDefaultPathSeed);
  const auto field = walk::local_time(path);
  const double ratio =
      static_cast<double>(walk::self_intersection(field, 0)) /
      static_cast<double>(n);
  EXPECT_GE(ratio, 1.4);
  EXPECT_LE(ratio, 1.6);
}

TEST(GreenExact, DriftedNearestNeighbour) {
  const auto table = walk::green_exact(StepLaw::nearest_neighbour(0.75), -5, 10);
  for (std::int64_t x = 0; x <= 10; ++x) EXPECT_NEAR(table.at(x), 2.0, 1e-12);
  EXPECT_NEAR(table.at(-1), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(table.at(-2), 2.0 / 9.0, 1e-12);
  EXPECT_GE(table.at(0), 1.0);
}

TEST(GreenExact, NegativeDriftReflects) {
  const auto table = walk::green_exact(StepLaw::nearest_neighbour(0.25), -10, 5);
  for (std::int64_t x = -10; x <= 0; ++x) EXPECT_NEAR(table.at(x), 2.0, 1e-12);
  EXPECT_NEAR(table.at(1), 2.0 / 3.0, 1e-12);
}

TEST(GreenExact, DeterministicOrbit) {
  const auto table = walk::green_exact(StepLaw::deterministic(2), -2, 6);
  EXPECT_DOUBLE_EQ(table.at(3), 0.0);
  EXPECT_DOUBLE_EQ(table.at(4), 1.0);
  EXPECT_DOUBLE_EQ(table.at(0), 1.0);
  EXPECT_DOUBLE_EQ(table.at(-2), 0.0);
}

TEST(GreenExact, UnsupportedLaws) {
  EXPECT_THROW(walk::green_exact(StepLaw::nearest_neighbour(0.5), -1, 1),
               UnsupportedError);
  EXPECT_THROW(walk::green_exact(StepLaw({-1, 2}, {0.4, 0.6}), -1, 1),
               UnsupportedError);
}

TEST(GreenMc, UnitWalkIsExact) {
  const auto table = walk::green_mc(StepLaw::deterministic(1), -3, 40, 50, 10, 5);
  for (std::int64_t x = 0; x <= 40; ++x) {
    EXPECT_DOUBLE_EQ(table.at(x), 1.0);
    EXPECT_DOUBLE_EQ(table.std_error(x), 0.0);
  }
  EXPECT_DOUBLE_EQ(table.at(-1), 0.0);
  EXPECT_LT(table.truncation_bound, 1e-30);
}

TEST(GreenMc, MatchesClosedFormWithinThreeSigma) {
  const auto law = StepLaw::nearest_neighbour(0.9);
  const auto mc = walk::green_mc(law, -3, 6, 2000, 20000, 314159);
  const auto exact = walk::green_exact(law, -3, 6);
  for (std::int64_t x = -3; x <= 6; ++x) {
    const double se = std::max(mc.std_error(x), 1e-12);
    EXPECT_NEAR(mc.at(x), exact.at(x), 3.0 * se) << "x=" << x;
    EXPECT_GE(mc.at(x), 0.0);
  }
  EXPECT_NEAR(mc.at(0), 1.25, 3.0 * mc.std_error(0));
  EXPECT_GE(mc.at(0), 1.0);  // the k = 0 visit alone contributes 1
}

TEST(GreenMc, FarSitesAreZero) {
  const auto table = walk::green_mc(StepLaw::nearest_neighbour(0.9), -30, -20,
                                    500, 200, 11);
  for (std::int64_t x = -30; x <= -20; ++x) EXPECT_DOUBLE_EQ(table.at(x), 0.0);
}

TEST(GreenMc, DeterministicAcrossThreadCounts) {
  const auto law = StepLaw::nearest_neighbour(0.8);
  const auto one = walk::green_mc(law, -2, 5, 300, 500, 77, 1);
  const auto two = walk::green_mc(law, -2, 5, 300, 500, 77, 4);
  EXPECT_EQ(one.values, two.values);
  EXPECT_EQ(one.std_errors, two.std_errors);
}

TEST(GreenMc, RejectsRecurrentLaw) {
  EXPECT_THROW(
      walk::green_mc(StepLaw::nearest_neighbour(0.5), -1, 1, 10, 10, 1),
      TransienceError);
}
