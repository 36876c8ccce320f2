#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "ise/embedding.hpp"
#include "ise/error.hpp"

namespace ise {

inline constexpr int kNoise = -1;

struct ClusterState {
  std::vector<int> labels;  // kNoise or cluster id in [0, num_clusters)
  int num_clusters = 0;
  std::vector<FeatureVector> centroids;

  std::size_t noise_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
  }
  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(num_clusters));
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] != kNoise) out[static_cast<std::size_t>(labels[i])].push_back(i);
    return out;
  }
};

struct ClusterConfig {
  double eps = 0.4;
  int min_points = 4;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Keeps the smaller id as root so a component's root is its minimum member.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Per-cluster mean of member rows, l2-normalized.
inline std::vector<FeatureVector> compute_centroids(const EmbeddingTable& table, std::span<const int> labels) {
  if (labels.size() != table.rows()) throw Error(ErrorCode::invariant, "compute_centroids: label count mismatch");
  int num_clusters = 0;
  for (int l : labels) num_clusters = std::max(num_clusters, l + 1);
  if (num_clusters == 0) throw Error(ErrorCode::empty_state, "compute_centroids: no non-noise labels");

  std::vector<FeatureVector> sums(static_cast<std::size_t>(num_clusters), FeatureVector(table.dim(), 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_clusters), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    axpy(1.0, table.row(i), sums[c]);
    ++counts[c];
  }
  std::vector<FeatureVector> centroids;
  centroids.reserve(sums.size());
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] == 0) throw Error(ErrorCode::invariant, "compute_centroids: empty cluster " + std::to_string(c));
    for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
    centroids.push_back(l2_normalize(sums[c]));
  }
  return centroids;
}

/// DBSCAN over cosine distance 1 - cosine_sim. A point is core when its eps-neighbourhood
/// (itself included) holds at least min_points points. Clusters are numbered by ascending
/// lowest core id; a border point joins the cluster of its lowest-id core neighbour.
inline ClusterState dbscan(const EmbeddingTable& table, const ClusterConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw Error(ErrorCode::config, "dbscan: eps must be positive");
  if (cfg.min_points < 1) throw Error(ErrorCode::config, "dbscan: min_points must be >= 1");
  const std::size_t n = table.rows();
  if (n == 0) throw Error(ErrorCode::empty_state, "dbscan: empty embedding table");

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm(table.row(i));
    if (!(norms[i] > 0.0)) throw Error(ErrorCode::degenerate_input, "dbscan: zero-norm row " + std::to_string(i));
  }

  // Neighbour lists come out sorted ascending because j runs ascending.
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) neighbours[i].push_back(i);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = 1.0 - dot(table.row(i), table.row(j)) / (norms[i] * norms[j]);
      if (dist <= cfg.eps) {
        neighbours[i].push_back(j);
        neighbours[j].push_back(i);
      }
    }
  }
  for (auto& nb : neighbours) std::sort(nb.begin(), nb.end());

  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbours[i].size() >= static_cast<std::size_t>(cfg.min_points);

  detail::DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (std::size_t j : neighbours[i])
      if (core[j]) sets.unite(i, j);
  }

  ClusterState state;
  state.labels.assign(n, kNoise);
  std::vector<int> root_label(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::size_t r = sets.find(i);
    if (root_label[r] == kNoise) root_label[r] = state.num_clusters++;
    state.labels[i] = root_label[r];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t j : neighbours[i]) {
      if (core[j]) {
        state.labels[i] = state.labels[j];
        break;
      }
    }
  }
  if (state.num_clusters > 0) state.centroids = compute_centroids(table, state.labels);
  return state;
}

}  // namespace ise
