#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bordernet/bootstrap.hpp"
#include "oracles.hpp"

using namespace bordernet::stats;

namespace {

using oracles::brute_force_bootstrap;

const std::vector<AccuracyPair> kFive = {
    {0.80, 0.84}, {0.75, 0.83}, {0.90, 0.88}, {0.60, 0.72}, {0.85, 0.86}};

}  // namespace

TEST_CASE("degenerate sample") {
  const std::vector<AccuracyPair> same(10, {0.5, 0.6});
  const auto r = bootstrap_median_improvement(same, 1000, 1);
  CHECK(r.median_pct == doctest::Approx(120.0).epsilon(1e-15));
  CHECK(r.ci_low_pct == r.median_pct);
  CHECK(r.ci_high_pct == r.median_pct);
  const auto e = bootstrap_exhaustive(same);
  CHECK(e.ci_low_pct == r.median_pct);
  CHECK(e.ci_high_pct == r.median_pct);
}

TEST_CASE("median and quantile helpers") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS(median({}));
  const std::vector<double> sorted{1, 2, 3, 4};
  CHECK(lower_quantile(sorted, 0.25) == 1.0);
  CHECK(lower_quantile(sorted, 0.26) == 2.0);
  CHECK(lower_quantile(sorted, 1.0) == 4.0);
  CHECK(lower_quantile(sorted, 0.0) == 1.0);
}

TEST_CASE("exhaustive bootstrap matches the n^n oracle") {
  const auto exact = bootstrap_exhaustive(kFive);
  const auto oracle = brute_force_bootstrap(kFive);
  CHECK(exact.median_pct == oracle.median_pct);
  CHECK(exact.ci_low_pct == oracle.ci_low_pct);
  CHECK(exact.ci_high_pct == oracle.ci_high_pct);

  const std::vector<AccuracyPair> six(kFive.begin(), kFive.end());
  auto even = six;
  even.push_back({0.70, 0.77});
  const auto e6 = bootstrap_exhaustive(even);
  const auto o6 = brute_force_bootstrap(even);
  CHECK(e6.median_pct == o6.median_pct);
  CHECK(e6.ci_low_pct == o6.ci_low_pct);
  CHECK(e6.ci_high_pct == o6.ci_high_pct);
}

TEST_CASE("resampled bootstrap converges to the exhaustive distribution") {
  const auto exact = bootstrap_exhaustive(kFive);
  const auto mc = bootstrap_median_improvement(kFive, 100000, 42);
  CHECK(mc.median_pct == exact.median_pct);
  // With five pairs the median takes one of five values, so the quantiles
  // land on the same support point.
  CHECK(mc.ci_low_pct == exact.ci_low_pct);
  CHECK(mc.ci_high_pct == exact.ci_high_pct);
}

TEST_CASE("deterministic given the seed") {
  const auto a = bootstrap_median_improvement(kFive, 5000, 7);
  const auto b = bootstrap_median_improvement(kFive, 5000, 7);
  CHECK(a.ci_low_pct == b.ci_low_pct);
  CHECK(a.ci_high_pct == b.ci_high_pct);
  CHECK(a.ci_low_pct <= a.median_pct);
  CHECK(a.median_pct <= a.ci_high_pct);
}

TEST_CASE("near-equal accuracies give an improvement just under 100%") {
  std::vector<AccuracyPair> pairs;
  for (int i = 0; i < 100; ++i) {
    const double l = 0.974 + 0.001 * ((i % 5) - 2);
    pairs.push_back({l, l * (0.999 + 0.0002 * ((i % 3) - 1))});
  }
  const auto r = bootstrap_median_improvement(pairs, 10000, 42);
  CHECK(r.median_pct == doctest::Approx(99.9).epsilon(1e-4));
}

TEST_CASE("ratio of means mode") {
  const std::vector<AccuracyPair> pairs{{0.5, 0.6}, {0.5, 0.4}, {1.0, 1.0}};
  CHECK(improvement(pairs, ImprovementMode::ratio_of_means) == doctest::Approx(100.0));
  CHECK(improvement(pairs, ImprovementMode::per_cycle_ratio) == doctest::Approx(100.0));
  const std::vector<AccuracyPair> skew{{0.2, 0.4}, {0.8, 0.8}, {0.8, 0.8}};
  CHECK(improvement(skew, ImprovementMode::ratio_of_means) == doctest::Approx(111.111111));
  CHECK(improvement(skew, ImprovementMode::per_cycle_ratio) == doctest::Approx(100.0));
  CHECK(parse_improvement_mode("ratio-of-means") == ImprovementMode::ratio_of_means);
  CHECK(to_string(ImprovementMode::per_cycle_ratio) == "per-cycle-ratio");
  CHECK_THROWS(parse_improvement_mode("mean"));
}

TEST_CASE("invalid input") {
  const std::vector<AccuracyPair> zero{{0.5, 0.5}, {0.0, 0.3}};
  CHECK_THROWS_AS(bootstrap_median_improvement(zero, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_median_improvement({}, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_median_improvement(kFive, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_exhaustive(std::vector<AccuracyPair>(11, {0.5, 0.5})), std::invalid_argument);
}

TEST_CASE("confidence interval calibration") {
  // Ratios ~ N(105, 3) around a known median of 105.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> base(0.7, 0.9);
  std::normal_distribution<double> ratio(105.0, 3.0);
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<AccuracyPair> pairs(30);
    for (auto& p : pairs) {
      p.lenet5 = base(rng);
      p.bordernet = p.lenet5 * ratio(rng) / 100.0;
    }
    const auto r = bootstrap_median_improvement(pairs, 2000, 1000 + rep);
    covered += r.ci_low_pct <= 105.0 && 105.0 <= r.ci_high_pct;
  }
  MESSAGE("coverage " << covered << "/200");
  CHECK(covered >= 180);
}
