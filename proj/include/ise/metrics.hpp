#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "ise/clustering.hpp"
#include "ise/embedding.hpp"
#include "ise/error.hpp"

namespace ise {

struct ClusterQuality {
  double fowlkes_mallows = 0.0;
  double adjusted_rand = 0.0;
  double adjusted_mutual_info = 0.0;
  double v_measure = 0.0;

  double mean() const { return (fowlkes_mallows + adjusted_rand + adjusted_mutual_info + v_measure) / 4.0; }
};

inline constexpr std::array<std::size_t, 3> kCmcRanks{1, 5, 10};

struct RetrievalScores {
  double map = 0.0;
  std::array<double, kCmcRanks.size()> cmc{};
  std::size_t queries = 0;  // queries with at least one gallery match
};

namespace detail {

// Dense contingency table: rows are true classes, columns predicted clusters.
struct Contingency {
  std::vector<std::vector<double>> counts;
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  double n = 0.0;
};

inline std::vector<std::size_t> densify(std::span<const int> labels) {
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids.try_emplace(l, ids.size()).first->second);
  return out;
}

inline Contingency contingency(std::span<const int> truth, std::span<const int> pred) {
  const auto t = densify(truth);
  const auto p = densify(pred);
  const std::size_t rows = t.empty() ? 0 : *std::max_element(t.begin(), t.end()) + 1;
  const std::size_t cols = p.empty() ? 0 : *std::max_element(p.begin(), p.end()) + 1;
  Contingency c;
  c.counts.assign(rows, std::vector<double>(cols, 0.0));
  c.row_sums.assign(rows, 0.0);
  c.col_sums.assign(cols, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    c.counts[t[i]][p[i]] += 1.0;
    c.row_sums[t[i]] += 1.0;
    c.col_sums[p[i]] += 1.0;
  }
  c.n = static_cast<double>(t.size());
  return c;
}

inline double comb2(double x) { return x * (x - 1.0) / 2.0; }

inline double entropy(std::span<const double> sums, double n) {
  double h = 0.0;
  for (double s : sums)
    if (s > 0.0) h -= (s / n) * std::log(s / n);
  return h;
}

inline double mutual_info(const Contingency& c) {
  double mi = 0.0;
  for (std::size_t i = 0; i < c.row_sums.size(); ++i)
    for (std::size_t j = 0; j < c.col_sums.size(); ++j) {
      const double nij = c.counts[i][j];
      if (nij > 0.0) mi += (nij / c.n) * std::log(c.n * nij / (c.row_sums[i] * c.col_sums[j]));
    }
  return std::max(mi, 0.0);
}

// Expected mutual information under the hypergeometric model of random labelings.
inline double expected_mutual_info(const Contingency& c) {
  const double n = c.n;
  const double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (double a : c.row_sums) {
    for (double b : c.col_sums) {
      const double lo = std::max(1.0, a + b - n);
      const double hi = std::min(a, b);
      const double lg_fixed = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::lgamma(n - a + 1.0) +
                              std::lgamma(n - b + 1.0) - lg_n;
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double lg_var = std::lgamma(nij + 1.0) + std::lgamma(a - nij + 1.0) + std::lgamma(b - nij + 1.0) +
                              std::lgamma(n - a - b + nij + 1.0);
        emi += (nij / n) * std::log(n * nij / (a * b)) * std::exp(lg_fixed - lg_var);
      }
    }
  }
  return emi;
}

}  // namespace detail

/// Fowlkes-Mallows, adjusted Rand, adjusted mutual information (arithmetic normalization) and
/// V-measure of `pred` against `truth`. Samples whose prediction is kNoise are dropped first.
inline ClusterQuality cluster_quality(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::invariant, "cluster_quality: label arrays differ in length");
  std::vector<int> p;
  std::vector<int> t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == kNoise) continue;
    p.push_back(pred[i]);
    t.push_back(truth[i]);
  }
  if (p.size() < 2) throw Error(ErrorCode::empty_state, "cluster_quality: fewer than two non-noise samples");

  const detail::Contingency c = detail::contingency(t, p);
  const double n = c.n;
  ClusterQuality q;

  double sum_sq = 0.0;
  double sum_comb = 0.0;
  for (const auto& row : c.counts)
    for (double x : row) {
      sum_sq += x * x;
      sum_comb += detail::comb2(x);
    }
  double row_sq = 0.0;
  double row_comb = 0.0;
  for (double a : c.row_sums) {
    row_sq += a * a;
    row_comb += detail::comb2(a);
  }
  double col_sq = 0.0;
  double col_comb = 0.0;
  for (double b : c.col_sums) {
    col_sq += b * b;
    col_comb += detail::comb2(b);
  }

  const double tk = sum_sq - n;
  const double pk = col_sq - n;
  const double qk = row_sq - n;
  q.fowlkes_mallows = tk != 0.0 ? std::sqrt(tk / pk) * std::sqrt(tk / qk) : 0.0;

  const double expected = row_comb * col_comb / detail::comb2(n);
  const double max_index = 0.5 * (row_comb + col_comb);
  const double ari_den = max_index - expected;
  q.adjusted_rand = ari_den == 0.0 ? 1.0 : (sum_comb - expected) / ari_den;

  const double h_true = detail::entropy(c.row_sums, n);
  const double h_pred = detail::entropy(c.col_sums, n);
  const double mi = detail::mutual_info(c);

  const std::size_t k_true = c.row_sums.size();
  const std::size_t k_pred = c.col_sums.size();
  if (k_true == 1 && k_pred == 1) {
    q.adjusted_mutual_info = 1.0;
  } else {
    const double emi = detail::expected_mutual_info(c);
    double den = 0.5 * (h_true + h_pred) - emi;
    const double eps = std::numeric_limits<double>::epsilon();
    den = den < 0.0 ? std::min(den, -eps) : std::max(den, eps);
    q.adjusted_mutual_info = (mi - emi) / den;
  }

  const double homogeneity = h_true != 0.0 ? mi / h_true : 1.0;
  const double completeness = h_pred != 0.0 ? mi / h_pred : 1.0;
  q.v_measure = homogeneity + completeness != 0.0 ? 2.0 * homogeneity * completeness / (homogeneity + completeness) : 0.0;
  return q;
}

/// mAP and CMC of cosine-ranked gallery lists, no re-ranking. Queries without any gallery match
/// are skipped with a warning.
inline RetrievalScores evaluate_retrieval(std::span<const FeatureVector> queries, std::span<const FeatureVector> gallery,
                                          std::span<const int> query_ids, std::span<const int> gallery_ids) {
  if (queries.size() != query_ids.size() || gallery.size() != gallery_ids.size())
    throw Error(ErrorCode::invariant, "evaluate_retrieval: id arrays do not match embeddings");
  RetrievalScores out;
  std::vector<double> sims(gallery.size());
  std::vector<std::size_t> order(gallery.size());
  std::size_t skipped = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t g = 0; g < gallery.size(); ++g) sims[g] = cosine_sim(queries[q], gallery[g]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

    std::size_t hits = 0;
    std::size_t first_hit = 0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (gallery_ids[order[r]] != query_ids[q]) continue;
      ++hits;
      if (hits == 1) first_hit = r + 1;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    if (hits == 0) {
      ++skipped;
      continue;
    }
    ++out.queries;
    out.map += precision_sum / static_cast<double>(hits);
    for (std::size_t k = 0; k < kCmcRanks.size(); ++k)
      if (first_hit <= kCmcRanks[k]) out.cmc[k] += 1.0;
  }
  if (skipped > 0) warn("evaluate_retrieval: " + std::to_string(skipped) + " queries without gallery match excluded");
  if (out.queries > 0) {
    out.map /= static_cast<double>(out.queries);
    for (double& v : out.cmc) v /= static_cast<double>(out.queries);
  }
  return out;
}

}  // namespace ise
