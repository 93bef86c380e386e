#include <gtest/gtest.h>

#include "combarw/bounds.hpp"

using namespace combarw;

TEST(Renewal, SegmentLengthsAreGeometric) {
  for (double lambda : {0.5, 1.0}) {
    const auto t = simulate_renewal_path(lambda, 2000, 3, default_threads());
    EXPECT_GT(geometric_gof(t.lengths, sleep_probability(lambda)).p_value, 0.01) << lambda;
  }
}

TEST(Renewal, RewardIsHeightPlusOne) {
  const auto t = simulate_renewal_path(1.0, 200, 5, 1, true);
  for (std::size_t i = 0; i < t.lengths.size(); ++i) {
    EXPECT_GE(t.lengths[i], 1);
    EXPECT_EQ(t.rewards[i], t.heights[i] + 1);
    EXPECT_LE(t.heights[i], t.lengths[i]);
  }
  EXPECT_GT(t.slope, 0.0);
  EXPECT_GT(t.slope_se, 0.0);
}

TEST(Renewal, Deterministic) {
  EXPECT_EQ(renewal_segment(0.8, 42), renewal_segment(0.8, 42));
  EXPECT_THROW(simulate_renewal_path(1.0, 0, 1), std::invalid_argument);
}

TEST(Renewal, SlopeMatchesLowerEstimate) {
  const double lambda = 1.0;
  const auto t = simulate_renewal_path(lambda, 3000, 7, default_threads());
  const auto lo = theorem2_lower(lambda, 60, 400, 8, default_threads());
  EXPECT_NEAR(t.slope, lo.estimate, 3 * combined_se(t.slope_se, lo.se) + lo.truncation);
}

TEST(Lower, BasicProperties) {
  for (double lambda : {0.5, 2.0}) {
    const double p = sleep_probability(lambda);
    const auto lo = theorem2_lower(lambda, 40, 100, 1);
    EXPECT_GE(lo.estimate, p);
    EXPECT_LE(lo.estimate, 2.0);
    EXPECT_GT(lo.se, 0.0);
    EXPECT_NEAR(lo.truncation, p * std::pow(1 - p, 40) * (40 + 1 / p), 1e-15);
  }
  EXPECT_THROW(theorem2_lower(1.0, 0, 10, 1), std::invalid_argument);
}

TEST(Upper, BetweenOneAndTwo) {
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto up = theorem2_upper(lambda, 80, 60, 2);
    EXPECT_GT(up.mean, 1.0);
    EXPECT_LT(up.mean, 2.0);
  }
  EXPECT_THROW(theorem2_upper(1.0, 0, 10, 1), std::invalid_argument);
}

TEST(Upper, PerSampleInequality) {
  for (const auto& r : partial_runs(80, 1.0, 60, 9)) {
    EXPECT_TRUE(r.teeth_hold_one);
    EXPECT_LE(r.S, 80 + r.tau);
  }
}

TEST(Sandwich, SmallComb) {
  const auto b = bounds_report(1.0, 80, 80, 40, 200, 11, default_threads());
  EXPECT_TRUE(b.direct_le_upper) << b.direct.mean << " vs " << b.upper.mean;
  EXPECT_LE(b.lower.estimate, b.upper.mean);
}

TEST(Fig2, OrderingAtModerateLambda) {
  const auto rows = fig2_experiment({1.0}, 100, 80, 4, default_threads());
  ASSERT_EQ(rows.size(), 1u);
  const auto& r = rows[0];
  EXPECT_LT(r.teeth.mean + 3 * combined_se(r.teeth.se, r.spine.se), r.spine.mean);
  EXPECT_LT(r.spine.mean, r.interval.mean);
}

TEST(Fig3, RowsAverageSpineAndTooth) {
  const auto rows = fig3_experiment(0.8, 30, 500, 3);
  ASSERT_EQ(rows.size(), 500u);
  for (const auto& r : rows) EXPECT_NEAR(r.avg, (r.spine + r.tooth) / 2, 1e-12);
  EXPECT_EQ(rows.front().step, 1);
}

TEST(HockeyStick, RecoversSyntheticParameters) {
  std::vector<double> x, y;
  Rng rng = make_rng(1);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int i = 0; i < 1000; ++i) {
    x.push_back(i);
    y.push_back(0.1 + 0.002 * std::min(i, 400) + noise(rng));
  }
  const auto f = fit_hockey_stick(x, y);
  EXPECT_NEAR(f.breakpoint, 400, 15);
  EXPECT_NEAR(f.slope, 0.002, 1e-4);
  EXPECT_NEAR(f.plateau, 0.9, 0.01);
  EXPECT_GT(f.r_squared, 0.99);
  EXPECT_THROW(fit_hockey_stick({1, 2}, {1, 2}), std::invalid_argument);
}
