#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ise/embedding.hpp"
#include "ise/error.hpp"
#include "ise/memory_bank.hpp"
#include "ise/pli.hpp"

namespace ise {

/// Which samples the label-preserving term draws its hardest positive/negatives from.
enum class LpSource { none, support, actual };

struct LossConfig {
  double beta = 0.1;
  double tau1 = 0.05;
  double tau2 = 0.6;
  LpSource lp = LpSource::support;
};

struct LossTerms {
  double l_se = 0.0;
  double l_lp = 0.0;
  double total = 0.0;
  double beta = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
};

/// Same shape as the embedding table; rows absent from the batch stay zero.
using GradientBuffer = EmbeddingTable;

/// One training step's worth of samples. `features` are the l2-normalized table rows; support
/// `s` was interpolated from batch position `support_pos[s]`.
struct MiniBatch {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> clusters;
  std::vector<FeatureVector> features;
  std::vector<SupportSample> supports;
  std::vector<std::size_t> support_pos;

  std::size_t size() const noexcept { return rows.size(); }
};

inline MiniBatch make_minibatch(const EmbeddingTable& table, std::vector<std::size_t> rows,
                                std::vector<std::size_t> clusters) {
  if (rows.size() != clusters.size()) throw Error(ErrorCode::invariant, "make_minibatch: rows/clusters mismatch");
  MiniBatch b;
  b.rows = std::move(rows);
  b.clusters = std::move(clusters);
  b.features.reserve(b.rows.size());
  for (std::size_t r : b.rows) b.features.push_back(l2_normalize(table.row(r)));
  return b;
}

namespace detail {

struct Softmax {
  double loss = 0.0;
  std::vector<double> prob;
};

// Cross-entropy of softmax(logits) at `positive`, via log-sum-exp.
inline Softmax softmax_xent(std::span<const double> logits, std::size_t positive) {
  const auto top = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  const double mx = logits[top];
  double rest = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (j != top) rest += std::exp(logits[j] - mx);
  const double lse = mx + std::log1p(rest);
  Softmax out;
  out.loss = (mx - logits[positive]) + std::log1p(rest);
  out.prob.reserve(logits.size());
  for (double l : logits) out.prob.push_back(std::exp(l - lse));
  return out;
}

inline void check_tau(double tau, const char* what) {
  if (!(tau > 0.0)) throw Error(ErrorCode::config, std::string(what) + ": temperature must be positive");
}

}  // namespace detail

/// -log softmax of cosine similarities / tau against `entries`, positive at `positive`.
/// When `grad` is non-empty, adds scale * dLoss/df to it.
inline double info_nce(ConstVec f, std::span<const FeatureVector> entries, std::size_t positive, double tau,
                       MutVec grad = {}, double scale = 1.0) {
  detail::check_tau(tau, "info_nce");
  if (positive >= entries.size()) throw Error(ErrorCode::out_of_range, "info_nce: positive index out of range");
  std::vector<double> logits(entries.size());
  for (std::size_t c = 0; c < entries.size(); ++c) logits[c] = cosine_sim(f, entries[c]) / tau;
  const detail::Softmax sm = detail::softmax_xent(logits, positive);
  if (!grad.empty()) {
    for (std::size_t c = 0; c < entries.size(); ++c) {
      const double coeff = (sm.prob[c] - (c == positive ? 1.0 : 0.0)) / tau;
      accumulate_cosine_grad(f, entries[c], scale * coeff, grad);
    }
  }
  return sm.loss;
}

inline double loss_info_nce(ConstVec f, const MemoryBank& bank, std::size_t positive, double tau) {
  return info_nce(f, bank.entries(), positive, tau);
}

/// Sample-extension loss for one actual or support feature against the cluster memory.
inline double loss_se(ConstVec f_hat, const MemoryBank& bank, std::size_t own_cluster, double tau1,
                      MutVec grad = {}, double scale = 1.0) {
  if (bank.size() < 2) throw Error(ErrorCode::config, "loss_se: need at least two clusters");
  if (own_cluster >= bank.size()) throw Error(ErrorCode::out_of_range, "loss_se: own cluster out of range");
  return info_nce(f_hat, bank.entries(), own_cluster, tau1, grad, scale);
}

/// Candidates for hardest positive/negative mining: a vector, its pseudo label and its sample id.
struct LpCandidates {
  std::vector<ConstVec> vectors;
  std::vector<std::size_t> clusters;
  std::vector<std::size_t> ids;
};

struct LpSelection {
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;  // one per other cluster, ascending cluster id
  bool valid = false;
};

/// Hardest positive = own-cluster candidate least similar to the anchor; hardest negative per
/// other cluster = that cluster's candidate most similar to it. Ties go to the lower sample id.
inline LpSelection select_lp(ConstVec anchor, const LpCandidates& cand, std::size_t own_cluster) {
  LpSelection sel;
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  std::size_t pos = none;
  double pos_sim = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> best_neg;  // (cluster, candidate)
  std::vector<double> best_neg_sim;
  for (std::size_t i = 0; i < cand.vectors.size(); ++i) {
    const double s = cosine_sim(anchor, cand.vectors[i]);
    const std::size_t c = cand.clusters[i];
    if (c == own_cluster) {
      if (pos == none || s < pos_sim || (s == pos_sim && cand.ids[i] < cand.ids[pos])) {
        pos = i;
        pos_sim = s;
      }
      continue;
    }
    auto it = std::find_if(best_neg.begin(), best_neg.end(), [&](const auto& p) { return p.first == c; });
    if (it == best_neg.end()) {
      best_neg.emplace_back(c, i);
      best_neg_sim.push_back(s);
      continue;
    }
    const auto k = static_cast<std::size_t>(it - best_neg.begin());
    if (s > best_neg_sim[k] || (s == best_neg_sim[k] && cand.ids[i] < cand.ids[it->second])) {
      it->second = i;
      best_neg_sim[k] = s;
    }
  }
  std::sort(best_neg.begin(), best_neg.end());
  if (pos == none || best_neg.empty()) return sel;
  sel.positive = pos;
  for (const auto& p : best_neg) sel.negatives.push_back(p.second);
  sel.valid = true;
  return sel;
}

/// Label-preserving loss for one anchor with the positive included in the denominator.
/// Gradients: scale * dL/d(anchor) into grad_anchor, scale * dL/d(candidate i) into grad_cand[i].
inline double lp_term(ConstVec anchor, const LpCandidates& cand, const LpSelection& sel, double tau2,
                      MutVec grad_anchor = {}, std::span<FeatureVector> grad_cand = {}, double scale = 1.0) {
  detail::check_tau(tau2, "loss_lp");
  std::vector<std::size_t> order;
  order.reserve(sel.negatives.size() + 1);
  order.push_back(sel.positive);
  order.insert(order.end(), sel.negatives.begin(), sel.negatives.end());
  std::vector<double> logits;
  logits.reserve(order.size());
  for (std::size_t i : order) logits.push_back(cosine_sim(anchor, cand.vectors[i]) / tau2);
  const detail::Softmax sm = detail::softmax_xent(logits, 0);
  if (!grad_anchor.empty()) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double coeff = scale * (sm.prob[k] - (k == 0 ? 1.0 : 0.0)) / tau2;
      const ConstVec other = cand.vectors[order[k]];
      accumulate_cosine_grad(anchor, other, coeff, grad_anchor);
      if (!grad_cand.empty()) accumulate_cosine_grad(other, anchor, coeff, grad_cand[order[k]]);
    }
  }
  return sm.loss;
}

/// Label-preserving loss of `f` against mined support samples. Returns 0 (with a warning) when
/// the candidates cover fewer than two clusters.
inline double loss_lp(ConstVec f, const LpCandidates& supports, std::size_t own_cluster, double tau2) {
  const LpSelection sel = select_lp(f, supports, own_cluster);
  if (!sel.valid) {
    warn("loss_lp: fewer than two clusters or no positive among candidates; term skipped");
    return 0.0;
  }
  return lp_term(f, supports, sel, tau2);
}

/// LP variant that mines among actual batch samples instead of support samples.
inline double loss_lp_actual(ConstVec f, const LpCandidates& batch_samples, std::size_t own_cluster, double tau2) {
  return loss_lp(f, batch_samples, own_cluster, tau2);
}

namespace detail {

inline LpCandidates actual_candidates(const MiniBatch& b) {
  LpCandidates c;
  for (std::size_t p = 0; p < b.size(); ++p) {
    c.vectors.emplace_back(b.features[p]);
    c.clusters.push_back(b.clusters[p]);
    c.ids.push_back(b.rows[p]);
  }
  return c;
}

inline LpCandidates support_candidates(const MiniBatch& b) {
  LpCandidates c;
  for (const SupportSample& s : b.supports) {
    c.vectors.emplace_back(s.vector);
    c.clusters.push_back(s.source_cluster);
    c.ids.push_back(s.source_id);
  }
  return c;
}

inline std::size_t distinct_count(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

/// L = L_SE + beta * L_LP over a minibatch, with gradients w.r.t. the table rows.
///
/// L_SE averages over every actual feature and every support sample. Support gradients reach
/// their source feature unchanged; features reach rows through the normalization Jacobian.
/// Bank entries are constants. L_LP anchors on actual features only and is not evaluated when
/// beta is zero or the LP source is `none`.
inline std::pair<LossTerms, GradientBuffer> total_loss_and_grad(const EmbeddingTable& table, const MiniBatch& batch,
                                                                const MemoryBank& bank, const LossConfig& cfg) {
  detail::check_tau(cfg.tau1, "total_loss");
  detail::check_tau(cfg.tau2, "total_loss");
  const std::size_t n = batch.size();
  if (n == 0) throw Error(ErrorCode::empty_state, "total_loss: empty minibatch");
  if (batch.support_pos.size() != batch.supports.size())
    throw Error(ErrorCode::invariant, "total_loss: support bookkeeping mismatch");
  const std::size_t d = table.dim();

  LossTerms terms;
  terms.beta = cfg.beta;
  terms.tau1 = cfg.tau1;
  terms.tau2 = cfg.tau2;

  std::vector<FeatureVector> g_feat(n, FeatureVector(d, 0.0));
  std::vector<FeatureVector> g_supp(batch.supports.size(), FeatureVector(d, 0.0));

  // Supports grouped by source position so the reduction order is fixed: each actual term
  // followed by its own supports.
  std::vector<std::vector<std::size_t>> supports_of(n);
  for (std::size_t s = 0; s < batch.supports.size(); ++s) supports_of.at(batch.support_pos[s]).push_back(s);

  const double se_terms = static_cast<double>(n + batch.supports.size());
  double se_sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double group = loss_se(batch.features[p], bank, batch.clusters[p], cfg.tau1, g_feat[p], 1.0 / se_terms);
    for (std::size_t s : supports_of[p])
      group += loss_se(batch.supports[s].vector, bank, batch.clusters[p], cfg.tau1, g_supp[s], 1.0 / se_terms);
    se_sum += group;
  }
  terms.l_se = se_sum / se_terms;

  if (cfg.beta != 0.0 && cfg.lp != LpSource::none) {
    if (detail::distinct_count(batch.clusters) < 2) {
      warn("total_loss: minibatch holds fewer than two clusters; label-preserving term skipped");
    } else {
      const bool on_support = cfg.lp == LpSource::support;
      const LpCandidates cand = on_support ? detail::support_candidates(batch) : detail::actual_candidates(batch);
      std::vector<FeatureVector>& g_cand = on_support ? g_supp : g_feat;
      const double scale = cfg.beta / static_cast<double>(n);
      double lp_sum = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const LpSelection sel = select_lp(batch.features[p], cand, batch.clusters[p]);
        if (!sel.valid) continue;
        lp_sum += lp_term(batch.features[p], cand, sel, cfg.tau2, g_feat[p], g_cand, scale);
      }
      terms.l_lp = lp_sum / static_cast<double>(n);
    }
  }
  terms.total = terms.l_se + cfg.beta * terms.l_lp;

  for (std::size_t s = 0; s < batch.supports.size(); ++s) axpy(1.0, g_supp[s], g_feat[batch.support_pos[s]]);

  GradientBuffer grad(table.rows(), d);
  for (std::size_t p = 0; p < n; ++p) {
    const ConstVec row = table.row(batch.rows[p]);
    const double r = norm(row);
    const FeatureVector& u = batch.features[p];
    const double proj = dot(u, g_feat[p]);
    MutVec out = grad.row(batch.rows[p]);
    for (std::size_t i = 0; i < d; ++i) out[i] += (g_feat[p][i] - proj * u[i]) / r;
  }
  return {terms, std::move(grad)};
}

}  // namespace ise
