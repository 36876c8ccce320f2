#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ise/clustering.hpp"
#include "test_util.hpp"

using namespace ise;

namespace {

EmbeddingTable two_orthogonal_blobs() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  EmbeddingTable t(20, 2);
  for (std::size_t i = 0; i < 20; ++i) {
    const bool first = i < 10;
    t.row(i)[0] = (first ? 1.0 : 0.0) + jitter(rng);
    t.row(i)[1] = (first ? 0.0 : 1.0) + jitter(rng);
  }
  return t;
}

}  // namespace

TEST(Dbscan, SeparatedBlobs) {
  const auto s = dbscan(two_orthogonal_blobs(), {0.1, 4});
  EXPECT_EQ(s.num_clusters, 2);
  EXPECT_EQ(s.noise_count(), 0u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(s.labels[i], i < 10 ? 0 : 1);
}

TEST(Dbscan, IsolatedPointIsNoise) {
  auto rows = testutil::rows_of(two_orthogonal_blobs());
  rows.push_back({-1.0, -1.0});
  const auto s = dbscan(testutil::table_from(rows), {0.1, 4});
  EXPECT_EQ(s.labels.back(), kNoise);
  EXPECT_EQ(s.num_clusters, 2);
}

TEST(Dbscan, SinglePointAndIdenticalPoints) {
  EXPECT_EQ(dbscan(testutil::table_from({{1.0, 2.0}}), {0.4, 4}).labels, std::vector<int>{kNoise});
  const auto s = dbscan(testutil::table_from(std::vector<std::vector<double>>(6, {0.3, 0.7})), {0.4, 4});
  EXPECT_EQ(s.num_clusters, 1);
  EXPECT_EQ(s.labels, std::vector<int>(6, 0));
}

TEST(Dbscan, Errors) {
  EXPECT_THROW(dbscan(EmbeddingTable(0, 2), {}), Error);
  EXPECT_THROW(dbscan(two_orthogonal_blobs(), {0.0, 4}), Error);
  EXPECT_THROW(dbscan(two_orthogonal_blobs(), {0.4, 0}), Error);
}

TEST(Dbscan, HandInstanceMatchesOracle) {
  std::mt19937_64 rng(30);
  const auto t = testutil::blob_table(rng, 30, 3, 3, 0.25);
  const auto s = dbscan(t, {0.1, 4});
  EXPECT_EQ(s.labels, oracle::dbscan(testutil::rows_of(t), 0.1, 4));
}

TEST(Dbscan, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> n_dist(1, 200), d_dist(2, 8), b_dist(1, 6);
  std::uniform_real_distribution<double> eps_dist(0.02, 0.5), spread(0.05, 0.6);
  std::uniform_int_distribution<int> mp(1, 6);
  for (int k = 0; k < 100; ++k) {
    const auto t = testutil::blob_table(rng, n_dist(rng), d_dist(rng), b_dist(rng), spread(rng));
    const double eps = eps_dist(rng);
    const int min_points = mp(rng);
    const auto s = dbscan(t, {eps, min_points});
    const auto o = oracle::dbscan(testutil::rows_of(t), eps, min_points);
    ASSERT_EQ(s.labels, o) << "instance " << k;
  }
}

TEST(Dbscan, StructuralInvariants) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const auto t = testutil::blob_table(rng, 120, 4, 4, 0.3);
    const ClusterConfig cfg{0.15, 4};
    const auto s = dbscan(t, cfg);
    const auto members = s.members();
    ASSERT_EQ(static_cast<int>(s.centroids.size()), s.num_clusters);
    for (int l : s.labels) EXPECT_TRUE(l == kNoise || (l >= 0 && l < s.num_clusters));
    for (int c = 0; c < s.num_clusters; ++c) {
      EXPECT_GE(members[c].size(), static_cast<std::size_t>(cfg.min_points));
      FeatureVector mean(t.dim(), 0.0);
      for (std::size_t i : members[c])
        for (std::size_t j = 0; j < t.dim(); ++j) mean[j] += t.row(i)[j] / static_cast<double>(members[c].size());
      const auto expect = l2_normalize(mean);
      for (std::size_t j = 0; j < t.dim(); ++j) EXPECT_NEAR(s.centroids[c][j], expect[j], 1e-12);
    }
  }
}

TEST(Dbscan, PermutationInvariantUpToRelabeling) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 10; ++k) {
    const auto t = testutil::blob_table(rng, 80, 5, 3, 0.3);
    std::vector<std::size_t> perm(t.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    EmbeddingTable p(t.rows(), t.dim());
    for (std::size_t i = 0; i < perm.size(); ++i) std::copy(t.row(perm[i]).begin(), t.row(perm[i]).end(), p.row(i).begin());
    const auto a = dbscan(t, {0.2, 4});
    const auto b = dbscan(p, {0.2, 4});
    const auto rows = testutil::rows_of(t);
    std::vector<int> x, y;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      const int la = a.labels[perm[i]];
      EXPECT_EQ(la == kNoise, b.labels[i] == kNoise);
      int count = 0;
      for (const auto& r : rows) count += (1.0 - oracle::naive_cosine(rows[perm[i]], r)) <= 0.2;
      if (count >= 4) {
        x.push_back(la);
        y.push_back(b.labels[i]);
      }
    }
    EXPECT_TRUE(testutil::same_partition(x, y));
  }
}

TEST(Dbscan, ScaleInvariant) {
  std::mt19937_64 rng(12);
  auto t = testutil::blob_table(rng, 150, 6, 4, 0.3);
  const auto a = dbscan(t, {0.2, 4});
  t.scale(3.0);
  EXPECT_EQ(dbscan(t, {0.2, 4}).labels, a.labels);
}

TEST(Dbscan, ClustersAreDensityConnected) {
  std::mt19937_64 rng(21);
  const auto t = testutil::blob_table(rng, 100, 3, 3, 0.3);
  const double eps = 0.1;
  const auto s = dbscan(t, {eps, 4});
  const auto rows = testutil::rows_of(t);
  const std::size_t n = rows.size();
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int c = 0;
    for (std::size_t j = 0; j < n; ++j) c += (1.0 - oracle::naive_cosine(rows[i], rows[j])) <= eps;
    core[i] = c >= 4;
  }
  // Every member is within eps of a core point of its own cluster.
  for (std::size_t i = 0; i < n; ++i) {
    if (s.labels[i] == kNoise) continue;
    bool ok = false;
    for (std::size_t j = 0; j < n && !ok; ++j)
      ok = core[j] && s.labels[j] == s.labels[i] && (1.0 - oracle::naive_cosine(rows[i], rows[j])) <= eps;
    EXPECT_TRUE(ok) << i;
  }
}

TEST(Centroids, HandCases) {
  auto c = compute_centroids(testutil::table_from({{1, 0}, {1, 0}}), std::vector<int>{0, 0});
  EXPECT_EQ(c[0], (FeatureVector{1, 0}));
  c = compute_centroids(testutil::table_from({{1, 0}, {0, 1}}), std::vector<int>{0, 0});
  EXPECT_NEAR(c[0][0], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c[0][1], 1.0 / std::sqrt(2.0), 1e-15);
  c = compute_centroids(testutil::table_from({{2, 0}, {0, 4}, {2, 2}}), std::vector<int>{0, 0, 0});
  EXPECT_NEAR(c[0][0], 0.5547001962252291, 1e-12);
  EXPECT_NEAR(c[0][1], 0.8320502943378437, 1e-12);
}

TEST(Centroids, NoiseIgnoredAndEmptyRejected) {
  const auto c = compute_centroids(testutil::table_from({{1, 0}, {0, 1}, {5, 5}}), std::vector<int>{0, 1, kNoise});
  EXPECT_EQ(c.size(), 2u);
  EXPECT_THROW(compute_centroids(testutil::table_from({{1, 0}}), std::vector<int>{kNoise}), Error);
  EXPECT_THROW(compute_centroids(testutil::table_from({{1, 0}, {0, 1}}), std::vector<int>{0, 2}), Error);
}
