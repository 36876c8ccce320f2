#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <vector>

#include "ise/embedding.hpp"
#include "oracles/oracles.hpp"

namespace testutil {

inline ise::EmbeddingTable table_from(const std::vector<std::vector<double>>& rows) {
  ise::EmbeddingTable t(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.row(i)[j] = rows[i][j];
  return t;
}

inline oracle::Rows rows_of(const ise::EmbeddingTable& t) {
  oracle::Rows out;
  for (std::size_t i = 0; i < t.rows(); ++i) out.emplace_back(t.row(i).begin(), t.row(i).end());
  return out;
}

/// Same partition up to renaming of cluster ids; noise (-1) must match exactly.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == -1) != (b[i] == -1)) return false;
    if (a[i] == -1) continue;
    auto [it, fresh] = ab.try_emplace(a[i], b[i]);
    if (!fresh && it->second != b[i]) return false;
    auto [jt, fresh2] = ba.try_emplace(b[i], a[i]);
    if (!fresh2 && jt->second != a[i]) return false;
  }
  return true;
}

inline std::vector<double> gaussian_vec(std::mt19937_64& rng, std::size_t d, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(d);
  for (double& x : v) x = g(rng);
  return v;
}

/// Points scattered around a few random directions, for clustering instances.
inline ise::EmbeddingTable blob_table(std::mt19937_64& rng, std::size_t n, std::size_t d, std::size_t blobs,
                                      double spread) {
  std::vector<std::vector<double>> centers;
  for (std::size_t b = 0; b < blobs; ++b) centers.push_back(gaussian_vec(rng, d));
  ise::EmbeddingTable t(n, d);
  std::uniform_int_distribution<std::size_t> pick(0, blobs - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[pick(rng)];
    const auto noise = gaussian_vec(rng, d, spread);
    for (std::size_t j = 0; j < d; ++j) t.row(i)[j] = c[j] + noise[j];
  }
  return t;
}

}  // namespace testutil
