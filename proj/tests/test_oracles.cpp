#include <gtest/gtest.h>

#include <cmath>

#include "oracles/oracles.hpp"

TEST(Oracle, DbscanTrivialCases) {
  EXPECT_EQ(oracle::dbscan({{1.0, 0.0}}, 0.4, 4), std::vector<int>{-1});
  EXPECT_EQ(oracle::dbscan(oracle::Rows(5, {0.2, 0.9}), 0.4, 4), std::vector<int>(5, 0));
  EXPECT_THROW(oracle::dbscan(oracle::Rows(501, {1.0, 0.0}), 0.4, 4), std::invalid_argument);
}

TEST(Oracle, FiniteDiffOnQuadratic) {
  const auto f = [](const oracle::Vec& x) { return 3.0 * x[0] * x[0] + x[0] * x[1] - 2.0 * x[1]; };
  const auto g = oracle::finite_diff(f, {1.5, -0.5}, 1e-5);
  EXPECT_NEAR(g[0], 6.0 * 1.5 - 0.5, 1e-8);
  EXPECT_NEAR(g[1], 1.5 - 2.0, 1e-8);
  EXPECT_THROW(oracle::finite_diff(f, {0, 0}, 1e-3), std::invalid_argument);
  EXPECT_THROW(oracle::finite_diff([](const oracle::Vec&) { return std::nan(""); }, {0.0}, 1e-6), std::domain_error);
}

TEST(Oracle, PairMetricsIdentityAndSinglePair) {
  const auto q = oracle::pair_metrics({0, 0, 1, 2, 2}, {4, 4, 5, 6, 6});
  EXPECT_DOUBLE_EQ(q.fm, 1.0);
  EXPECT_DOUBLE_EQ(q.ari, 1.0);
  EXPECT_NEAR(q.ami, 1.0, 1e-12);
  EXPECT_NEAR(q.v, 1.0, 1e-12);
  // one pair: split prediction against a joined truth has tp = tn = fp = 0, fn = 1
  EXPECT_EQ(oracle::pair_metrics({0, 1}, {0, 0}).ari, 0.0);
  EXPECT_EQ(oracle::pair_metrics({0, 0}, {0, 1}).ari, 0.0);
  EXPECT_EQ(oracle::pair_metrics({0, 0}, {0, 0}).ari, 1.0);
}

TEST(Oracle, ReportDeviations) {
  const auto r = oracle::report("x", 2.0, 2.5);
  EXPECT_EQ(r.abs_dev, 0.5);
  EXPECT_EQ(r.rel_dev, 0.2);
  EXPECT_EQ(oracle::report("zero", 0.0, 0.0).rel_dev, 0.0);
}

TEST(Oracle, HardestAndLpPick) {
  EXPECT_EQ(oracle::hardest({1, 0}, {{1, 0}, {0, 1}, {0.5, 0.5}}), 1u);
  const auto p = oracle::lp_pick({1, 0}, {{1, 0}, {0.8, 0.6}, {0.6, 0.8}, {-1, 0}}, {0, 0, 1, 1}, {0, 1, 2, 3}, 0);
  ASSERT_TRUE(p.valid);
  EXPECT_EQ(p.positive, 1u);
  EXPECT_EQ(p.negatives, std::vector<std::size_t>{2});
  EXPECT_FALSE(oracle::lp_pick({1, 0}, {{1, 0}}, {0}, {0}, 0).valid);
}

TEST(Oracle, AveragePrecision) {
  EXPECT_NEAR(oracle::average_precision({true, false, true}), 5.0 / 6.0, 1e-15);
  EXPECT_EQ(oracle::average_precision({false, false}), 0.0);
}
