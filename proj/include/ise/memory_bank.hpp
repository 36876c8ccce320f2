#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ise/embedding.hpp"
#include "ise/error.hpp"

namespace ise {

enum class UpdateMode { hardest, all };

inline std::string_view to_string(UpdateMode m) { return m == UpdateMode::hardest ? "HARDEST" : "ALL"; }

/// Cluster-level memory: one unit-norm entry per pseudo-label, momentum-updated.
class MemoryBank {
 public:
  MemoryBank() = default;

  static MemoryBank from_centroids(std::span<const FeatureVector> centroids, double mu,
                                   UpdateMode mode = UpdateMode::hardest) {
    if (centroids.empty()) throw Error(ErrorCode::empty_state, "MemoryBank: no centroids");
    if (!(mu >= 0.0 && mu <= 1.0)) throw Error(ErrorCode::config, "MemoryBank: mu must lie in [0, 1]");
    MemoryBank bank;
    bank.entries_.assign(centroids.begin(), centroids.end());
    bank.mu_ = mu;
    bank.mode_ = mode;
    return bank;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t dim() const noexcept { return entries_.empty() ? 0 : entries_.front().size(); }
  double mu() const noexcept { return mu_; }
  UpdateMode mode() const noexcept { return mode_; }
  const FeatureVector& entry(std::size_t c) const { return entries_.at(c); }
  std::span<const FeatureVector> entries() const noexcept { return entries_; }

  /// m <- normalize(mu * m + (1 - mu) * normalize(f)).
  const FeatureVector& momentum_update(std::size_t cluster, ConstVec f) {
    if (cluster >= entries_.size())
      throw Error(ErrorCode::out_of_range, "momentum_update: cluster id " + std::to_string(cluster) + " out of range");
    const FeatureVector unit = l2_normalize(f);
    FeatureVector& m = entries_[cluster];
    FeatureVector mixed(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) mixed[i] = mu_ * m[i] + (1.0 - mu_) * unit[i];
    m = l2_normalize(mixed);
    return m;
  }

  /// Index into `members` of the candidate least similar to entry `cluster`; first index wins ties.
  std::size_t select_hardest(std::size_t cluster, std::span<const ConstVec> members) const {
    if (members.empty()) throw Error(ErrorCode::degenerate_input, "select_hardest: empty member list");
    const FeatureVector& m = entries_.at(cluster);
    std::size_t best = 0;
    double best_sim = cosine_sim(members[0], m);
    for (std::size_t i = 1; i < members.size(); ++i) {
      const double s = cosine_sim(members[i], m);
      if (s < best_sim) {
        best_sim = s;
        best = i;
      }
    }
    return best;
  }

 private:
  std::vector<FeatureVector> entries_;
  double mu_ = 0.2;
  UpdateMode mode_ = UpdateMode::hardest;
};

}  // namespace ise
