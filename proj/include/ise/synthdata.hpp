#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ise/embedding.hpp"
#include "ise/error.hpp"
#include "ise/random.hpp"

namespace ise {

enum class Split { train, query, gallery };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "TRAIN";
    case Split::query: return "QUERY";
    case Split::gallery: return "GALLERY";
  }
  return "?";
}

/// Synthetic identity-structured embeddings. `split_fraction` of the identities are drawn from two
/// modes `split_gap` radians apart (sub-cluster pressure); `overlap_pairs` identity pairs get
/// centers only `overlap_gap` radians apart (mixed-cluster pressure).
struct ScenarioConfig {
  int n_identities = 40;
  int samples_per_identity = 24;
  int dim = 32;
  double intra_spread = 0.25;  // typical angular deviation of a sample from its center, radians
  double split_fraction = 0.0;
  double split_gap = 1.2;
  int overlap_pairs = 0;
  double overlap_gap = 0.1;
  double train_fraction = 0.6;
  double query_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct LabeledDataset {
  EmbeddingTable embeddings;
  std::vector<int> true_ids;  // -1 when unknown
  std::vector<Split> split;

  std::size_t size() const noexcept { return true_ids.size(); }
  std::vector<std::size_t> indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] == s) out.push_back(i);
    return out;
  }
  bool has_true_ids() const {
    for (int id : true_ids)
      if (id < 0) return false;
    return !true_ids.empty();
  }
};

namespace detail {

inline FeatureVector random_unit(Rng& rng, std::size_t d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  FeatureVector v(d);
  for (;;) {
    for (double& x : v) x = gauss(rng);
    if (norm(v) > 1e-12) return l2_normalize(v);
  }
}

// Rotate unit `c` by `angle` radians towards a random direction orthogonal to it.
inline FeatureVector rotate_random(const FeatureVector& c, double angle, Rng& rng) {
  FeatureVector u = random_unit(rng, c.size());
  axpy(-dot(u, c), c, u);
  u = l2_normalize(u);
  FeatureVector out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = std::cos(angle) * c[i] + std::sin(angle) * u[i];
  return l2_normalize(out);
}

}  // namespace detail

inline void validate(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::config, "scenario: " + m); };
  if (cfg.n_identities < 1) fail("n_identities must be positive");
  if (cfg.samples_per_identity < 2) fail("samples_per_identity must be at least 2");
  if (cfg.dim < 2) fail("dim must be at least 2");
  if (static_cast<std::uint64_t>(cfg.n_identities) * static_cast<std::uint64_t>(cfg.samples_per_identity) >
      (std::uint64_t{1} << 31))
    fail("n_identities * samples_per_identity overflows");
  if (!(cfg.intra_spread >= 0.0)) fail("intra_spread must be non-negative");
  if (!(cfg.split_fraction >= 0.0 && cfg.split_fraction <= 1.0)) fail("split_fraction must lie in [0, 1]");
  if (cfg.overlap_pairs < 0) fail("overlap_pairs must be non-negative");
  if (!(cfg.train_fraction > 0.0 && cfg.query_fraction >= 0.0 && cfg.train_fraction + cfg.query_fraction < 1.0))
    fail("train/query fractions must be positive and sum below 1");
  const auto n_split = static_cast<int>(std::lround(cfg.split_fraction * cfg.n_identities));
  if (n_split + 2 * cfg.overlap_pairs > cfg.n_identities)
    fail("not enough identities for the requested split identities and overlap pairs");
}

/// Deterministic in `cfg.seed`. Sample id = identity * samples_per_identity + index; within an
/// identity the first train_fraction of indices are TRAIN, the next query_fraction QUERY, the rest
/// GALLERY. Split identities alternate modes by index parity.
inline LabeledDataset generate(const ScenarioConfig& cfg) {
  validate(cfg);
  const auto n_id = static_cast<std::size_t>(cfg.n_identities);
  const auto per = static_cast<std::size_t>(cfg.samples_per_identity);
  const auto d = static_cast<std::size_t>(cfg.dim);

  Rng layout = make_stream(cfg.seed, 1);
  std::vector<FeatureVector> centers;
  centers.reserve(n_id);
  for (std::size_t i = 0; i < n_id; ++i) centers.push_back(detail::random_unit(layout, d));

  const std::vector<std::size_t> perm = sample_without_replacement(layout, n_id, n_id);
  const auto n_split = static_cast<std::size_t>(std::lround(cfg.split_fraction * cfg.n_identities));

  std::vector<std::vector<FeatureVector>> modes(n_id);
  for (std::size_t i = 0; i < n_id; ++i) modes[i] = {centers[i]};
  for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.overlap_pairs); ++k) {
    const std::size_t a = perm[n_split + 2 * k];
    const std::size_t b = perm[n_split + 2 * k + 1];
    modes[b] = {detail::rotate_random(centers[a], cfg.overlap_gap, layout)};
  }
  for (std::size_t k = 0; k < n_split; ++k) {
    const std::size_t id = perm[k];
    const FeatureVector& c = centers[id];
    FeatureVector u = detail::random_unit(layout, d);
    axpy(-dot(u, c), c, u);
    u = l2_normalize(u);
    const double half = cfg.split_gap / 2.0;
    FeatureVector m0(d), m1(d);
    for (std::size_t j = 0; j < d; ++j) {
      m0[j] = std::cos(half) * c[j] + std::sin(half) * u[j];
      m1[j] = std::cos(half) * c[j] - std::sin(half) * u[j];
    }
    modes[id] = {l2_normalize(m0), l2_normalize(m1)};
  }

  const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(per)));
  auto n_query = static_cast<std::size_t>(std::floor(cfg.query_fraction * static_cast<double>(per)));
  if (n_train == 0) throw Error(ErrorCode::config, "scenario: train_fraction leaves no TRAIN samples");
  if (n_query > 0 && n_train + n_query >= per) n_query = per - n_train - 1;

  LabeledDataset ds;
  ds.embeddings = EmbeddingTable(n_id * per, d);
  ds.true_ids.resize(n_id * per);
  ds.split.resize(n_id * per);
  Rng noise = make_stream(cfg.seed, 2);
  std::normal_distribution<double> gauss(0.0, cfg.intra_spread / std::sqrt(static_cast<double>(d)));
  for (std::size_t id = 0; id < n_id; ++id) {
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t row = id * per + k;
      const FeatureVector& center = modes[id][k % modes[id].size()];
      FeatureVector v(center);
      for (double& x : v) x += gauss(noise);
      const FeatureVector unit = l2_normalize(v);
      std::copy(unit.begin(), unit.end(), ds.embeddings.row(row).begin());
      ds.true_ids[row] = static_cast<int>(id);
      ds.split[row] = k < n_train ? Split::train : (k < n_train + n_query ? Split::query : Split::gallery);
    }
  }
  return ds;
}

}  // namespace ise
