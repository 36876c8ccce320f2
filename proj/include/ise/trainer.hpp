#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ise/clustering.hpp"
#include "ise/config.hpp"
#include "ise/embedding.hpp"
#include "ise/error.hpp"
#include "ise/losses.hpp"
#include "ise/memory_bank.hpp"
#include "ise/metrics.hpp"
#include "ise/pli.hpp"
#include "ise/random.hpp"
#include "ise/synthdata.hpp"

namespace ise {

struct EpochRecord {
  int epoch = 0;
  int clusters = 0;        // pseudo-label clusters used for training this epoch
  std::size_t noise = 0;   // samples excluded from training this epoch
  double loss_se = 0.0;
  double loss_lp = 0.0;
  ClusterQuality quality;  // re-clustering of the end-of-epoch embeddings vs ground truth
  RetrievalScores retrieval;
  double lambda = 0.0;     // interpolation degree at the last iteration of the epoch
  bool trained = false;
};

struct RunResult {
  std::vector<EpochRecord> records;
  EmbeddingTable embeddings;
};

/// Called after every epoch with the epoch's record and the current table.
using EpochObserver = std::function<void(const EpochRecord&, const EmbeddingTable&)>;

/// One batch position: table row and its pseudo label.
struct BatchEntry {
  std::size_t row = 0;
  std::size_t cluster = 0;
};

/// C_B clusters drawn without replacement, then P members from each: without replacement when
/// the cluster has at least P members, with replacement otherwise.
inline std::vector<BatchEntry> sample_batch(const std::vector<std::vector<std::size_t>>& members,
                                            std::size_t clusters_per_batch, std::size_t instances, Rng& rng) {
  std::vector<std::size_t> nonempty;
  for (std::size_t c = 0; c < members.size(); ++c)
    if (!members[c].empty()) nonempty.push_back(c);
  if (nonempty.empty()) throw Error(ErrorCode::empty_state, "sample_batch: no clusters with members");
  if (nonempty.size() < clusters_per_batch) {
    warn("sample_batch: only " + std::to_string(nonempty.size()) + " clusters for C_B=" +
         std::to_string(clusters_per_batch) + "; batch shrinks");
    clusters_per_batch = nonempty.size();
  }
  std::vector<BatchEntry> batch;
  batch.reserve(clusters_per_batch * instances);
  for (std::size_t pick : sample_without_replacement(rng, nonempty.size(), clusters_per_batch)) {
    const std::size_t c = nonempty[pick];
    const auto& pool = members[c];
    if (pool.size() >= instances) {
      for (std::size_t j : sample_without_replacement(rng, pool.size(), instances)) batch.push_back({pool[j], c});
    } else {
      for (std::size_t k = 0; k < instances; ++k) batch.push_back({pool[uniform_index(rng, pool.size())], c});
    }
  }
  return batch;
}

namespace detail {

inline std::size_t iterations_per_epoch(const RunConfig& cfg, std::size_t rows) {
  if (cfg.train.iters_per_epoch > 0) return static_cast<std::size_t>(cfg.train.iters_per_epoch);
  const auto b = static_cast<std::size_t>(cfg.train.batch_size);
  return std::max<std::size_t>(1, (rows + b - 1) / b);
}

inline double learning_rate(const TrainConfig& t, int epoch) {
  double lr = t.lr;
  for (int e : t.lr_decay_epochs)
    if (epoch >= e) lr *= t.lr_decay_factor;
  return lr;
}

inline LossConfig loss_config(const RunConfig& cfg) {
  LossConfig lc = cfg.loss;
  switch (cfg.train.mode) {
    case TrainMode::baseline: lc.lp = LpSource::none; break;
    case TrainMode::ise: lc.lp = LpSource::support; break;
    case TrainMode::lp_actual: lc.lp = LpSource::actual; break;
  }
  return lc;
}

// Candidate vectors for memory updates of one cluster, in (sample id, actual-before-support) order.
struct UpdateCandidate {
  std::size_t sample_id;
  int kind;  // 0 actual, 1 support
  std::size_t index;
  ConstVec vec;
};

inline void update_memory(MemoryBank& bank, const MiniBatch& batch) {
  std::vector<std::vector<UpdateCandidate>> per_cluster(bank.size());
  for (std::size_t p = 0; p < batch.size(); ++p)
    per_cluster[batch.clusters[p]].push_back({batch.rows[p], 0, p, batch.features[p]});
  for (std::size_t s = 0; s < batch.supports.size(); ++s) {
    const SupportSample& sup = batch.supports[s];
    per_cluster[sup.source_cluster].push_back({sup.source_id, 1, s, sup.vector});
  }
  for (std::size_t c = 0; c < per_cluster.size(); ++c) {
    auto& cand = per_cluster[c];
    if (cand.empty()) continue;
    std::stable_sort(cand.begin(), cand.end(), [](const UpdateCandidate& a, const UpdateCandidate& b) {
      return a.sample_id != b.sample_id ? a.sample_id < b.sample_id : a.kind < b.kind;
    });
    if (bank.mode() == UpdateMode::hardest) {
      std::vector<ConstVec> vecs;
      vecs.reserve(cand.size());
      for (const auto& u : cand) vecs.push_back(u.vec);
      bank.momentum_update(c, vecs[bank.select_hardest(c, vecs)]);
    } else {
      for (const auto& u : cand) bank.momentum_update(c, u.vec);
    }
  }
}

inline ClusterQuality quality_of(const ClusterState& state, const std::vector<int>& truth) {
  if (state.labels.size() - state.noise_count() < 2) {
    warn("end-of-epoch clustering left fewer than two samples; quality recorded as 0");
    return {};
  }
  return cluster_quality(state.labels, truth);
}

}  // namespace detail

/// Query/gallery retrieval over the current table (QUERY and GALLERY rows only).
inline RetrievalScores evaluate_split_retrieval(const EmbeddingTable& table, const LabeledDataset& ds) {
  const auto q_idx = ds.indices_of(Split::query);
  const auto g_idx = ds.indices_of(Split::gallery);
  if (q_idx.empty() || g_idx.empty()) return {};
  std::vector<FeatureVector> q, g;
  std::vector<int> qid, gid;
  for (std::size_t i : q_idx) {
    q.emplace_back(table.row(i).begin(), table.row(i).end());
    qid.push_back(ds.true_ids[i]);
  }
  for (std::size_t i : g_idx) {
    g.emplace_back(table.row(i).begin(), table.row(i).end());
    gid.push_back(ds.true_ids[i]);
  }
  return evaluate_retrieval(q, g, qid, gid);
}

/// Per-epoch evaluation: quality of `state` (a clustering of `table`) against the true ids, plus
/// query/gallery retrieval.
inline std::pair<ClusterQuality, RetrievalScores> evaluate_table(const EmbeddingTable& table, const ClusterState& state,
                                                                 const LabeledDataset& ds) {
  ClusterQuality q;
  if (ds.has_true_ids()) q = detail::quality_of(state, ds.true_ids);
  return {q, evaluate_split_retrieval(table, ds)};
}

inline std::pair<ClusterQuality, RetrievalScores> evaluate_table(const EmbeddingTable& table, const LabeledDataset& ds,
                                                                 const ClusterConfig& cc) {
  return evaluate_table(table, dbscan(table, cc), ds);
}

/// The training loop. Every row of the table is an unlabeled sample: each epoch clusters all
/// rows, trains on the non-noise ones and then evaluates.
inline RunResult run(const LabeledDataset& ds, const RunConfig& cfg, const EpochObserver& observer = {}) {
  validate(cfg);
  if (ds.size() != ds.embeddings.rows()) throw Error(ErrorCode::invariant, "run: dataset labels do not match table");
  if (ds.has_true_ids() && std::set<int>(ds.true_ids.begin(), ds.true_ids.end()).size() < 2)
    throw Error(ErrorCode::config, "run: dataset needs at least two identities");

  RunResult result;
  EmbeddingTable table = ds.embeddings;
  const TrainConfig& tc = cfg.train;
  const std::size_t iters = detail::iterations_per_epoch(cfg, table.rows());
  const auto clusters_per_batch = static_cast<std::size_t>(tc.batch_size / tc.instances);
  const auto instances = static_cast<std::size_t>(tc.instances);
  const bool extend = tc.mode == TrainMode::ise;
  const DegreeSchedule schedule{cfg.pli.schedule, cfg.pli.lambda0,
                                static_cast<long long>(iters) * static_cast<long long>(tc.epochs)};
  const LossConfig loss_cfg = detail::loss_config(cfg);

  Rng batch_rng = make_stream(cfg.seed, 101);
  long long t = 0;
  ClusterState state = dbscan(table, cfg.cluster);

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const double lr = detail::learning_rate(tc, epoch);
    rec.clusters = state.num_clusters;
    rec.noise = state.noise_count();

    if (state.num_clusters < 2) {
      warn("epoch " + std::to_string(epoch) + ": clustering found " + std::to_string(state.num_clusters) +
           " clusters; training skipped");
      t += static_cast<long long>(iters);
    } else {
      rec.trained = true;
      MemoryBank bank = MemoryBank::from_centroids(state.centroids, cfg.memory.mu, cfg.memory.update_mode);
      const auto members = state.members();
      DirectionPolicy policy{cfg.pli.direction, cfg.pli.k};
      if (extend && policy.k >= bank.size()) {
        warn("epoch " + std::to_string(epoch) + ": K=" + std::to_string(policy.k) + " needs more clusters; using " +
             std::to_string(bank.size() - 1));
        policy.k = bank.size() - 1;
      }

      double se_sum = 0.0;
      double lp_sum = 0.0;
      for (std::size_t it = 0; it < iters; ++it) {
        ++t;
        const auto entries = sample_batch(members, clusters_per_batch, instances, batch_rng);
        std::vector<std::size_t> rows, labels;
        for (const auto& e : entries) {
          rows.push_back(e.row);
          labels.push_back(e.cluster);
        }
        MiniBatch mb = make_minibatch(table, std::move(rows), std::move(labels));

        if (extend) {
          const double lambda = schedule(t);
          Rng dir_rng = make_stream(cfg.seed, 202, static_cast<std::uint64_t>(t));
          std::vector<std::size_t> order(mb.size());
          for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
          std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mb.rows[a] < mb.rows[b]; });
          std::vector<std::vector<SupportSample>> made(mb.size());
          for (std::size_t p : order) {
            const auto targets = select_directions(mb.features[p], bank, mb.clusters[p], policy, dir_rng);
            made[p] = generate_support(mb.features[p], mb.rows[p], mb.clusters[p], bank, targets, lambda);
          }
          for (std::size_t p = 0; p < mb.size(); ++p)
            for (auto& s : made[p]) {
              mb.supports.push_back(std::move(s));
              mb.support_pos.push_back(p);
            }
        }

        auto [terms, grad] = total_loss_and_grad(table, mb, bank, loss_cfg);
        se_sum += terms.l_se;
        lp_sum += terms.l_lp;

        std::vector<std::size_t> touched = mb.rows;
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        for (std::size_t r : touched) axpy(-lr, grad.row(r), table.row(r));
        for (std::size_t r : touched)
          for (double x : table.row(r))
            if (!std::isfinite(x)) throw Error(ErrorCode::invariant, "run: non-finite embedding after step");

        detail::update_memory(bank, mb);
      }
      rec.loss_se = se_sum / static_cast<double>(iters);
      rec.loss_lp = lp_sum / static_cast<double>(iters);
    }

    rec.lambda = extend ? schedule(t) : 0.0;
    // The end-of-epoch clustering is also the next epoch's pseudo-labelling.
    state = dbscan(table, cfg.cluster);
    std::tie(rec.quality, rec.retrieval) = evaluate_table(table, state, ds);
    result.records.push_back(rec);
    if (observer) observer(rec, table);
  }
  result.embeddings = std::move(table);
  return result;
}

}  // namespace ise
