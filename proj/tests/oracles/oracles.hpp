#pragma once

// Brute-force reference implementations for tests. Plain std containers only; nothing here
// includes or calls the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Rows = std::vector<Vec>;

struct OracleReport {
  std::string case_name;
  double main_value = 0.0;
  double oracle_value = 0.0;
  double abs_dev = 0.0;
  double rel_dev = 0.0;
};

/// rel_dev is |a - b| / max(|a|, |b|), and 0 when both are 0.
inline OracleReport report(std::string name, double main_value, double oracle_value) {
  OracleReport r{std::move(name), main_value, oracle_value, std::fabs(main_value - oracle_value), 0.0};
  const double scale = std::max(std::fabs(main_value), std::fabs(oracle_value));
  r.rel_dev = scale > 0.0 ? r.abs_dev / scale : 0.0;
  return r;
}

inline double naive_cosine(const Vec& a, const Vec& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// ---- DBSCAN -----------------------------------------------------------------------------

/// Textbook DBSCAN on cosine distance with a full distance matrix and BFS expansion. Points are
/// visited in id order, so clusters are numbered by their lowest core id; a border point joins
/// the cluster of its lowest-id core neighbour. Noise is -1.
inline std::vector<int> dbscan(const Rows& x, double eps, int min_points) {
  const std::size_t n = x.size();
  if (n > 500) throw std::invalid_argument("oracle::dbscan: N > 500");
  std::vector<std::vector<char>> near(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) near[i][j] = (1.0 - naive_cosine(x[i], x[j])) <= eps ? 1 : 0;
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) count += near[i][j];
    core[i] = count >= min_points ? 1 : 0;
  }
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!core[s] || label[s] != -1) continue;
    std::deque<std::size_t> queue{s};
    label[s] = next;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      for (std::size_t q = 0; q < n; ++q) {
        if (!near[p][q] || !core[q] || label[q] != -1) continue;
        label[q] = next;
        queue.push_back(q);
      }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (near[i][j] && core[j]) {
        label[i] = label[j];
        break;
      }
    }
  }
  return label;
}

// ---- cluster metrics --------------------------------------------------------------------

struct Quality {
  double fm = 0.0;
  double ari = 0.0;
  double ami = 0.0;
  double v = 0.0;
};

/// Metrics from explicit pair counts and a map-based contingency table. Samples whose
/// prediction is -1 are dropped first. AMI uses the arithmetic mean and the exact expected
/// mutual information, summed with log factorials built by repeated addition.
inline Quality pair_metrics(const std::vector<int>& pred_in, const std::vector<int>& truth_in) {
  if (pred_in.size() > 2000) throw std::invalid_argument("oracle::pair_metrics: N > 2000");
  std::vector<int> pred, truth;
  for (std::size_t i = 0; i < pred_in.size(); ++i) {
    if (pred_in[i] == -1) continue;
    pred.push_back(pred_in[i]);
    truth.push_back(truth_in[i]);
  }
  const std::size_t n = pred.size();

  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sp = pred[i] == pred[j];
      const bool st = truth[i] == truth[j];
      if (sp && st) ++tp;
      else if (sp) ++fp;
      else if (st) ++fn;
      else ++tn;
    }
  Quality q;
  q.fm = tp > 0 ? tp / std::sqrt((tp + fp) * (tp + fn)) : 0.0;
  if (fn == 0 && fp == 0) q.ari = 1.0;
  else q.ari = 2.0 * (tp * tn - fn * fp) / ((tp + fn) * (fn + tn) + (tp + fp) * (fp + tn));

  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> a, b;  // truth class sizes, predicted cluster sizes
  for (std::size_t i = 0; i < n; ++i) {
    cells[{truth[i], pred[i]}] += 1.0;
    a[truth[i]] += 1.0;
    b[pred[i]] += 1.0;
  }
  const double N = static_cast<double>(n);
  auto entropy = [&](const std::map<int, double>& m) {
    double h = 0.0;
    for (const auto& [k, c] : m) h -= (c / N) * std::log(c / N);
    return h;
  };
  const double ha = entropy(a), hb = entropy(b);
  double mi = 0.0;
  for (const auto& [key, c] : cells) mi += (c / N) * std::log(N * c / (a[key.first] * b[key.second]));

  std::vector<double> logfact(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) logfact[k] = logfact[k - 1] + std::log(static_cast<double>(k));
  auto lf = [&](double k) { return logfact[static_cast<std::size_t>(k)]; };
  double emi = 0.0;
  for (const auto& [ka, ai] : a)
    for (const auto& [kb, bj] : b) {
      const double lo = std::max(1.0, ai + bj - N);
      const double hi = std::min(ai, bj);
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double logp = lf(ai) + lf(bj) + lf(N - ai) + lf(N - bj) - lf(N) - lf(nij) - lf(ai - nij) -
                            lf(bj - nij) - lf(N - ai - bj + nij);
        emi += (nij / N) * std::log(N * nij / (ai * bj)) * std::exp(logp);
      }
    }
  if ((a.size() == 1 && b.size() == 1) || (a.empty() && b.empty())) {
    q.ami = 1.0;
  } else {
    double den = (ha + hb) / 2.0 - emi;
    const double tiny = std::numeric_limits<double>::epsilon();
    den = den < 0.0 ? std::min(den, -tiny) : std::max(den, tiny);
    q.ami = (mi - emi) / den;
  }

  const double h = ha > 0.0 ? mi / ha : 1.0;
  const double c = hb > 0.0 ? mi / hb : 1.0;
  q.v = (h + c) > 0.0 ? 2.0 * h * c / (h + c) : 0.0;
  return q;
}

// ---- finite differences -----------------------------------------------------------------

/// Central differences of `loss` at `x`, one coordinate at a time.
inline Vec finite_diff(const std::function<double(const Vec&)>& loss, const Vec& x, double h) {
  if (!(h >= 1e-8 && h <= 1e-4)) throw std::invalid_argument("oracle::finite_diff: h outside [1e-8, 1e-4]");
  Vec g(x.size(), 0.0);
  Vec y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double up = loss(y);
    y[i] = x[i] - h;
    const double down = loss(y);
    y[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::domain_error("oracle::finite_diff: non-finite loss at coordinate " + std::to_string(i));
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ---- hardest-sample search --------------------------------------------------------------

/// Index of the candidate least similar to `anchor`; the first index wins ties.
inline std::size_t hardest(const Vec& anchor, const Rows& cand) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < cand.size(); ++i)
    if (naive_cosine(anchor, cand[i]) < naive_cosine(anchor, cand[best])) best = i;
  return best;
}

struct LpPick {
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;  // ascending cluster id
  bool valid = false;
};

/// Hardest positive: own-cluster candidate with the smallest (similarity, id). Hardest negative
/// per other cluster: the candidate with the largest similarity, smallest id on ties.
inline LpPick lp_pick(const Vec& anchor, const Rows& cand, const std::vector<std::size_t>& clusters,
                      const std::vector<std::size_t>& ids, std::size_t own) {
  LpPick out;
  std::vector<std::size_t> pos;
  std::map<std::size_t, std::vector<std::size_t>> neg;
  for (std::size_t i = 0; i < cand.size(); ++i) (clusters[i] == own ? pos : neg[clusters[i]]).push_back(i);
  if (pos.empty() || neg.empty()) return out;
  auto sim = [&](std::size_t i) { return naive_cosine(anchor, cand[i]); };
  out.positive = *std::min_element(pos.begin(), pos.end(), [&](std::size_t i, std::size_t j) {
    return std::make_pair(sim(i), ids[i]) < std::make_pair(sim(j), ids[j]);
  });
  for (const auto& [c, members] : neg)
    out.negatives.push_back(*std::min_element(members.begin(), members.end(), [&](std::size_t i, std::size_t j) {
      return std::make_pair(-sim(i), ids[i]) < std::make_pair(-sim(j), ids[j]);
    }));
  out.valid = true;
  return out;
}

// ---- retrieval ----------------------------------------------------------------------------

/// Average precision of one ranked list of match flags.
inline double average_precision(const std::vector<bool>& ranked_matches) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t r = 0; r < ranked_matches.size(); ++r)
    if (ranked_matches[r]) {
      hits += 1.0;
      sum += hits / static_cast<double>(r + 1);
    }
  return hits > 0.0 ? sum / hits : 0.0;
}

}  // namespace oracle
