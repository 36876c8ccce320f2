#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ise/embedding.hpp"
#include "ise/error.hpp"
#include "ise/memory_bank.hpp"
#include "ise/random.hpp"

// Progressive linear interpolation: support samples f~ = f + lambda * (c* - c) / 2.

namespace ise {

enum class ScheduleKind { constant, linear, square, logarithm };
enum class DirectionKind { nearest, random, farthest };

inline std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "CONSTANT";
    case ScheduleKind::linear: return "LINEAR";
    case ScheduleKind::square: return "SQUARE";
    case ScheduleKind::logarithm: return "LOGARITHM";
  }
  return "?";
}

inline std::string_view to_string(DirectionKind k) {
  switch (k) {
    case DirectionKind::nearest: return "NEAREST";
    case DirectionKind::random: return "RANDOM";
    case DirectionKind::farthest: return "FARTHEST";
  }
  return "?";
}

struct DegreeSchedule {
  ScheduleKind kind = ScheduleKind::logarithm;
  double lambda0 = 1.0;
  long long total_iterations = 1;

  /// Degree at global iteration t in [0, T]. Iterations past T are clamped.
  double operator()(long long t) const {
    if (total_iterations <= 0) throw Error(ErrorCode::config, "DegreeSchedule: total iterations must be positive");
    if (t < 0) throw Error(ErrorCode::out_of_range, "DegreeSchedule: negative iteration");
    if (t > total_iterations) {
      warn("degree schedule: iteration " + std::to_string(t) + " past total " + std::to_string(total_iterations) +
           ", clamped");
      t = total_iterations;
    }
    const double x = static_cast<double>(t) / static_cast<double>(total_iterations);
    const double half = lambda0 / 2.0;
    switch (kind) {
      case ScheduleKind::constant: return half;
      case ScheduleKind::linear: return half * x;
      case ScheduleKind::square: return half * x * x;
      case ScheduleKind::logarithm:
        return half * std::log((std::numbers::e - 1.0) / static_cast<double>(total_iterations) * static_cast<double>(t) + 1.0);
    }
    return half;
  }
};

struct DirectionPolicy {
  DirectionKind kind = DirectionKind::nearest;
  std::size_t k = 1;
};

/// K target clusters for a sample whose own cluster is `own_cluster`. NEAREST is by descending
/// similarity to the bank entries, FARTHEST ascending; ties go to the lower cluster id. RANDOM
/// draws from `rng` and returns the clusters in draw order.
inline std::vector<std::size_t> select_directions(ConstVec f, const MemoryBank& bank, std::size_t own_cluster,
                                                  const DirectionPolicy& policy, Rng& rng) {
  const std::size_t c = bank.size();
  if (policy.k == 0) throw Error(ErrorCode::config, "select_directions: K must be positive");
  if (c <= policy.k)
    throw Error(ErrorCode::config, "select_directions: need more than K=" + std::to_string(policy.k) +
                                       " clusters, have " + std::to_string(c));
  if (own_cluster >= c) throw Error(ErrorCode::out_of_range, "select_directions: own cluster out of range");

  std::vector<std::size_t> candidates;
  candidates.reserve(c - 1);
  for (std::size_t j = 0; j < c; ++j)
    if (j != own_cluster) candidates.push_back(j);

  if (policy.kind == DirectionKind::random) {
    std::vector<std::size_t> out;
    for (std::size_t idx : sample_without_replacement(rng, candidates.size(), policy.k)) out.push_back(candidates[idx]);
    return out;
  }

  std::vector<double> sims(c, 0.0);
  for (std::size_t j : candidates) sims[j] = cosine_sim(f, bank.entry(j));
  const bool nearest = policy.kind == DirectionKind::nearest;
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return nearest ? sims[a] > sims[b] : sims[a] < sims[b];
  });
  candidates.resize(policy.k);
  return candidates;
}

struct SupportSample {
  FeatureVector vector;
  std::size_t source_id = 0;
  std::size_t source_cluster = 0;
  std::size_t target_cluster = 0;
  double lambda_used = 0.0;
};

/// One support sample per target centroid. The result is not normalized.
inline SupportSample interpolate(ConstVec f, ConstVec own_centroid, ConstVec target_centroid, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::config, "interpolate: lambda must be non-negative");
  SupportSample s;
  s.vector.assign(f.begin(), f.end());
  for (std::size_t i = 0; i < s.vector.size(); ++i)
    s.vector[i] += lambda * (0.5 * (target_centroid[i] - own_centroid[i]));
  s.lambda_used = lambda;
  return s;
}

inline std::vector<SupportSample> generate_support(ConstVec f, std::size_t source_id, std::size_t own_cluster,
                                                   const MemoryBank& bank, std::span<const std::size_t> targets,
                                                   double lambda) {
  std::vector<SupportSample> out;
  out.reserve(targets.size());
  for (std::size_t t : targets) {
    SupportSample s = interpolate(f, bank.entry(own_cluster), bank.entry(t), lambda);
    s.source_id = source_id;
    s.source_cluster = own_cluster;
    s.target_cluster = t;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ise
