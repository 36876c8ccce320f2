#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <cctype>
#include <cmath>
#include <functional>
#include <type_traits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ise/clustering.hpp"
#include "ise/error.hpp"
#include "ise/format.hpp"
#include "ise/losses.hpp"
#include "ise/memory_bank.hpp"
#include "ise/pli.hpp"
#include "ise/synthdata.hpp"

namespace ise {

enum class TrainMode { baseline, ise, lp_actual };

inline std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::baseline: return "BASELINE";
    case TrainMode::ise: return "ISE";
    case TrainMode::lp_actual: return "LP_ACTUAL";
  }
  return "?";
}

struct MemoryConfig {
  double mu = 0.2;
  UpdateMode update_mode = UpdateMode::hardest;
};

struct PliConfig {
  double lambda0 = 1.0;
  ScheduleKind schedule = ScheduleKind::logarithm;
  DirectionKind direction = DirectionKind::nearest;
  std::size_t k = 1;
};

struct TrainConfig {
  TrainMode mode = TrainMode::ise;
  int epochs = 30;
  int batch_size = 64;
  int instances = 4;         // P: samples per pseudo-cluster in a minibatch
  int iters_per_epoch = 0;   // 0: ceil(N / batch_size)
  double lr = 0.1;
  std::vector<int> lr_decay_epochs{20};
  double lr_decay_factor = 0.1;
  int dump_every = 0;        // write an embedding dump every n epochs; 0 disables
};

/// Fully-resolved run configuration; every field has a flat `section.key` name.
struct RunConfig {
  std::uint64_t seed = 0;
  TrainConfig train;
  ClusterConfig cluster;
  MemoryConfig memory;
  PliConfig pli;
  LossConfig loss;
  ScenarioConfig data;
};

using KeyValues = std::map<std::string, std::string>;

/// Parses `section.key = value` lines. `#` starts a comment, values may be double-quoted and
/// `[section]` headers prefix the keys that follow them.
inline KeyValues parse_key_values(std::string_view text, std::string_view origin = "config") {
  KeyValues out;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto fail = [&](const std::string& m) {
      throw Error(ErrorCode::config, std::string(origin) + ":" + std::to_string(line_no) + ": " + m);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    out[key] = std::string(value);
  }
  return out;
}

inline KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path);
}

/// `key=value` as given to `--set`.
inline std::pair<std::string, std::string> parse_override(std::string_view kv) {
  const auto eq = kv.find('=');
  if (eq == std::string_view::npos || trim(kv.substr(0, eq)).empty())
    throw Error(ErrorCode::config, "override '" + std::string(kv) + "' is not key=value");
  return {std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1)))};
}

namespace detail {

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value, std::string_view expected) {
  throw Error(ErrorCode::config, "bad value '" + value + "' for " + key + " (expected " + std::string(expected) + ")");
}

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

struct Binding {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class Access>
Binding real_binding(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return format_double(access(c)); },
          [access, key](RunConfig& c, const std::string& v) {
            const auto x = parse_double(v);
            if (!x || !std::isfinite(*x)) bad_value(key, v, "a real number");
            access(c) = *x;
          }};
}

template <class Access>
Binding int_binding(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return std::to_string(access(c)); },
          [access, key](RunConfig& c, const std::string& v) {
            const auto x = parse_int(v);
            if (!x) bad_value(key, v, "an integer");
            using T = std::remove_reference_t<decltype(access(c))>;
            if constexpr (std::is_unsigned_v<T>) {
              if (*x < 0) bad_value(key, v, "a non-negative integer");
            }
            access(c) = static_cast<T>(*x);
          }};
}

template <class Enum, std::size_t N, class Access>
Binding enum_binding(std::string key, Access access, const Enum (&options)[N]) {
  std::vector<Enum> opts(std::begin(options), std::end(options));
  return {key, [access](const RunConfig& c) { return std::string(to_string(access(c))); },
          [access, key, opts](RunConfig& c, const std::string& v) {
            const std::string u = upper(v);
            for (Enum e : opts)
              if (u == to_string(e)) {
                access(c) = e;
                return;
              }
            std::string expected;
            for (Enum e : opts) expected += (expected.empty() ? "" : "|") + std::string(to_string(e));
            bad_value(key, v, expected);
          }};
}

inline const std::vector<Binding>& bindings() {
  static const TrainMode modes[] = {TrainMode::baseline, TrainMode::ise, TrainMode::lp_actual};
  static const UpdateMode updates[] = {UpdateMode::hardest, UpdateMode::all};
  static const ScheduleKind schedules[] = {ScheduleKind::constant, ScheduleKind::linear, ScheduleKind::square,
                                           ScheduleKind::logarithm};
  static const DirectionKind directions[] = {DirectionKind::nearest, DirectionKind::random, DirectionKind::farthest};
  static const std::vector<Binding> table = {
      int_binding("seed", [](auto& c) -> auto& { return c.seed; }),
      enum_binding("train.mode", [](auto& c) -> auto& { return c.train.mode; }, modes),
      int_binding("train.epochs", [](auto& c) -> auto& { return c.train.epochs; }),
      int_binding("train.batch_size", [](auto& c) -> auto& { return c.train.batch_size; }),
      int_binding("train.instances", [](auto& c) -> auto& { return c.train.instances; }),
      int_binding("train.iters_per_epoch", [](auto& c) -> auto& { return c.train.iters_per_epoch; }),
      real_binding("train.lr", [](auto& c) -> auto& { return c.train.lr; }),
      {"train.lr_decay_epochs",
       [](const RunConfig& c) {
         std::string s;
         for (int e : c.train.lr_decay_epochs) s += (s.empty() ? "" : ",") + std::to_string(e);
         return s;
       },
       [](RunConfig& c, const std::string& v) {
         std::vector<int> epochs;
         std::string_view rest = v;
         while (!trim(rest).empty()) {
           const auto comma = rest.find(',');
           const auto x = parse_int(rest.substr(0, comma));
           if (!x) bad_value("train.lr_decay_epochs", v, "comma-separated integers");
           epochs.push_back(static_cast<int>(*x));
           if (comma == std::string_view::npos) break;
           rest.remove_prefix(comma + 1);
         }
         c.train.lr_decay_epochs = epochs;
       }},
      real_binding("train.lr_decay_factor", [](auto& c) -> auto& { return c.train.lr_decay_factor; }),
      int_binding("train.dump_every", [](auto& c) -> auto& { return c.train.dump_every; }),
      real_binding("cluster.eps", [](auto& c) -> auto& { return c.cluster.eps; }),
      int_binding("cluster.min_points", [](auto& c) -> auto& { return c.cluster.min_points; }),
      real_binding("memory.mu", [](auto& c) -> auto& { return c.memory.mu; }),
      enum_binding("memory.update_mode", [](auto& c) -> auto& { return c.memory.update_mode; }, updates),
      real_binding("pli.lambda0", [](auto& c) -> auto& { return c.pli.lambda0; }),
      enum_binding("pli.schedule", [](auto& c) -> auto& { return c.pli.schedule; }, schedules),
      enum_binding("pli.direction", [](auto& c) -> auto& { return c.pli.direction; }, directions),
      int_binding("pli.k", [](auto& c) -> auto& { return c.pli.k; }),
      real_binding("loss.beta", [](auto& c) -> auto& { return c.loss.beta; }),
      real_binding("loss.tau1", [](auto& c) -> auto& { return c.loss.tau1; }),
      real_binding("loss.tau2", [](auto& c) -> auto& { return c.loss.tau2; }),
      int_binding("data.n_identities", [](auto& c) -> auto& { return c.data.n_identities; }),
      int_binding("data.samples_per_identity", [](auto& c) -> auto& { return c.data.samples_per_identity; }),
      int_binding("data.dim", [](auto& c) -> auto& { return c.data.dim; }),
      real_binding("data.intra_spread", [](auto& c) -> auto& { return c.data.intra_spread; }),
      real_binding("data.split_fraction", [](auto& c) -> auto& { return c.data.split_fraction; }),
      real_binding("data.split_gap", [](auto& c) -> auto& { return c.data.split_gap; }),
      int_binding("data.overlap_pairs", [](auto& c) -> auto& { return c.data.overlap_pairs; }),
      real_binding("data.overlap_gap", [](auto& c) -> auto& { return c.data.overlap_gap; }),
      real_binding("data.train_fraction", [](auto& c) -> auto& { return c.data.train_fraction; }),
      real_binding("data.query_fraction", [](auto& c) -> auto& { return c.data.query_fraction; }),
  };
  return table;
}

}  // namespace detail

/// Every recognised key, in the order the resolved config is written.
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& b : detail::bindings()) keys.push_back(b.key);
  return keys;
}

inline void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& b : detail::bindings()) {
    if (b.key == key) {
      b.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::config, "unknown config key '" + key + "'");
}

inline void apply(RunConfig& cfg, const KeyValues& kv) {
  for (const auto& [k, v] : kv) apply(cfg, k, v);
}

inline KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues out;
  for (const auto& b : detail::bindings()) out[b.key] = b.get(cfg);
  return out;
}

/// Resolved config as `key = value` lines in binding order; parses back to the same config.
inline std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& b : detail::bindings()) out += b.key + " = " + b.get(cfg) + "\n";
  return out;
}

inline void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::config, m); };
  const auto& t = cfg.train;
  if (t.epochs < 1) fail("train.epochs must be positive");
  if (t.batch_size < 1 || t.instances < 1) fail("train.batch_size and train.instances must be positive");
  if (t.batch_size % t.instances != 0) fail("train.batch_size must be divisible by train.instances");
  if (t.iters_per_epoch < 0) fail("train.iters_per_epoch must be non-negative");
  if (!(t.lr > 0.0)) fail("train.lr must be positive");
  if (!(t.lr_decay_factor > 0.0)) fail("train.lr_decay_factor must be positive");
  if (t.dump_every < 0) fail("train.dump_every must be non-negative");
  if (!(cfg.cluster.eps > 0.0)) fail("cluster.eps must be positive");
  if (cfg.cluster.min_points < 1) fail("cluster.min_points must be at least 1");
  if (!(cfg.memory.mu >= 0.0 && cfg.memory.mu <= 1.0)) fail("memory.mu must lie in [0, 1]");
  if (!(cfg.pli.lambda0 >= 0.0)) fail("pli.lambda0 must be non-negative");
  if (cfg.pli.k < 1) fail("pli.k must be positive");
  if (!(cfg.loss.tau1 > 0.0) || !(cfg.loss.tau2 > 0.0)) fail("loss temperatures must be positive");
  if (!(cfg.loss.beta >= 0.0)) fail("loss.beta must be non-negative");
  validate(cfg.data);
}

}  // namespace ise
