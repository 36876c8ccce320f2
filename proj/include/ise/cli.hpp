#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ise/config.hpp"
#include "ise/error.hpp"
#include "ise/format.hpp"
#include "ise/io.hpp"
#include "ise/synthdata.hpp"
#include "ise/trainer.hpp"

namespace ise::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;

inline constexpr std::string_view kCsvHelp =
    "run.csv columns (one row per epoch):\n"
    "  epoch                 0-based epoch index\n"
    "  clusters              pseudo-label clusters used for training in the epoch\n"
    "  noise                 samples left out as noise in the epoch\n"
    "  loss_se               mean support-extended contrastive loss over the epoch's iterations\n"
    "  loss_lp               mean progressive-boundary loss over the epoch's iterations\n"
    "  fowlkes_mallows       end-of-epoch re-clustering vs true identities\n"
    "  adjusted_rand         as above\n"
    "  adjusted_mutual_info  as above (arithmetic normalisation)\n"
    "  v_measure             as above\n"
    "  map                   query/gallery mean average precision\n"
    "  cmc1,cmc5,cmc10       query/gallery CMC at ranks 1, 5, 10\n"
    "  lambda                interpolation degree at the epoch's last iteration\n"
    "Numbers use '.' and the shortest round-trip decimal form.\n";

/// Exit code for an error category.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::parse:
    case ErrorCode::out_of_range: return kExitConfig;
    default: return kExitInvariant;
  }
}

inline void report_error(std::ostream& err, ErrorCode code, std::string_view msg) {
  err << "ERROR code=" << to_string(code) << " msg=" << msg << '\n';
}

/// Runs `body`, mapping library errors to exit codes and `ERROR` lines on `err`.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    report_error(err, e.code(), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    report_error(err, ErrorCode::invariant, e.what());
    return kExitInvariant;
  }
}

/// Defaults, then the config file, then `--set` overrides in order, then `--seed`.
inline RunConfig resolve_config(const std::optional<std::string>& config_path,
                                const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
  RunConfig cfg;
  if (config_path) ise::apply(cfg, read_key_values(*config_path));
  for (const auto& o : overrides) {
    const auto [k, v] = parse_override(o);
    ise::apply(cfg, k, v);
  }
  if (seed) cfg.seed = *seed;
  validate(cfg);
  return cfg;
}

/// The synthetic dataset of a run; it shares the run's seed.
inline LabeledDataset make_dataset(const RunConfig& cfg) {
  ScenarioConfig sc = cfg.data;
  sc.seed = cfg.seed;
  return generate(sc);
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::config, "cannot create directory '" + dir.string() + "'");
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::config, "cannot write '" + path.string() + "'");
  out << text;
}

inline nlohmann::ordered_json quality_json(const ClusterQuality& q) {
  return {{"fowlkes_mallows", q.fowlkes_mallows},
          {"adjusted_rand", q.adjusted_rand},
          {"adjusted_mutual_info", q.adjusted_mutual_info},
          {"v_measure", q.v_measure}};
}

inline nlohmann::ordered_json retrieval_json(const RetrievalScores& r) {
  return {{"map", r.map}, {"cmc1", r.cmc[0]}, {"cmc5", r.cmc[1]}, {"cmc10", r.cmc[2]}, {"queries", r.queries}};
}

inline std::string dataset_text(const LabeledDataset& ds) {
  std::ostringstream s;
  write_dataset(s, ds);
  return s.str();
}

inline std::string run_csv_text(const std::vector<EpochRecord>& records) {
  std::ostringstream s;
  write_run_csv(s, records);
  return s.str();
}

// ---- run ----------------------------------------------------------------------------------

/// Writes run.csv, summary.json, config.txt and final_embeddings.txt (plus periodic dumps
/// epoch_<e>.txt when train.dump_every > 0) under `out_dir`.
inline int cmd_run(const RunConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  write_text(out_dir / "config.txt", to_config_text(cfg));
  const LabeledDataset ds = make_dataset(cfg);
  LabeledDataset snapshot = ds;
  const int every = cfg.train.dump_every;
  const RunResult result = run(ds, cfg, [&](const EpochRecord& rec, const EmbeddingTable& table) {
    if (every > 0 && (rec.epoch + 1) % every == 0) {
      snapshot.embeddings = table;
      write_text(out_dir / ("epoch_" + std::to_string(rec.epoch) + ".txt"), dataset_text(snapshot));
    }
  });
  write_text(out_dir / "run.csv", run_csv_text(result.records));
  snapshot.embeddings = result.embeddings;
  write_text(out_dir / "final_embeddings.txt", dataset_text(snapshot));

  const EpochRecord& last = result.records.back();
  nlohmann::ordered_json summary;
  summary["mode"] = std::string(to_string(cfg.train.mode));
  summary["seed"] = cfg.seed;
  summary["epochs"] = result.records.size();
  summary["final"] = {{"epoch", last.epoch},
                      {"clusters", last.clusters},
                      {"noise", last.noise},
                      {"loss_se", last.loss_se},
                      {"loss_lp", last.loss_lp},
                      {"quality", quality_json(last.quality)},
                      {"retrieval", retrieval_json(last.retrieval)},
                      {"lambda", last.lambda}};
  summary["skipped_epochs"] = std::count_if(result.records.begin(), result.records.end(),
                                            [](const EpochRecord& r) { return !r.trained; });
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

// ---- eval ---------------------------------------------------------------------------------

/// JSON with the quality of a fresh clustering (when true ids are present) and retrieval
/// (when both QUERY and GALLERY rows are present).
inline nlohmann::ordered_json evaluate_dump(const LabeledDataset& ds, const ClusterConfig& cc) {
  nlohmann::ordered_json out;
  out["samples"] = ds.size();
  const ClusterState state = dbscan(ds.embeddings, cc);
  out["clusters"] = state.num_clusters;
  out["noise"] = state.noise_count();
  if (ds.has_true_ids()) out["quality"] = quality_json(detail::quality_of(state, ds.true_ids));
  if (!ds.indices_of(Split::query).empty() && !ds.indices_of(Split::gallery).empty())
    out["retrieval"] = retrieval_json(evaluate_split_retrieval(ds.embeddings, ds));
  return out;
}

inline int cmd_eval(const std::string& path, const ClusterConfig& cc, std::ostream& out) {
  const LabeledDataset ds = read_dataset(path);
  out << evaluate_dump(ds, cc).dump(2) << '\n';
  return kExitOk;
}

// ---- gen ----------------------------------------------------------------------------------

inline int cmd_gen(const RunConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  write_text(out_dir / "dataset.txt", dataset_text(make_dataset(cfg)));
  write_text(out_dir / "config.txt", to_config_text(cfg));
  return kExitOk;
}

// ---- ablate -------------------------------------------------------------------------------

struct Arm {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct Manifest {
  RunConfig base;
  std::string matrix = "table1";
  std::vector<std::uint64_t> seeds;
  std::vector<Arm> arms;
};

/// Arms of a built-in matrix, as overrides on top of the manifest's base config.
inline std::vector<Arm> builtin_matrix(const std::string& name) {
  std::vector<Arm> arms;
  if (name == "table1") {
    arms = {{"no1_baseline", {{"train.mode", "BASELINE"}}},
            {"no2_pli", {{"train.mode", "ISE"}, {"loss.beta", "0"}}},
            {"no3_lp_actual", {{"train.mode", "LP_ACTUAL"}}},
            {"no4_pli_constant_lp", {{"train.mode", "ISE"}, {"pli.schedule", "CONSTANT"}}},
            {"no5_full", {{"train.mode", "ISE"}}}};
  } else if (name == "table2") {
    for (const char* s : {"CONSTANT", "LINEAR", "SQUARE", "LOGARITHM"})
      arms.push_back({std::string("schedule_") + s, {{"train.mode", "ISE"}, {"pli.schedule", s}}});
  } else if (name == "table3") {
    for (const char* d : {"NEAREST", "RANDOM", "FARTHEST"})
      for (const char* l : {"0.1", "0.5", "1.0", "2.0"})
        arms.push_back({std::string(d) + "_" + l, {{"train.mode", "ISE"}, {"pli.direction", d}, {"pli.lambda0", l}}});
  } else if (name == "table4") {
    for (const char* k : {"1", "3", "5", "10"})
      arms.push_back({std::string("k_") + k, {{"train.mode", "ISE"}, {"pli.k", k}}});
  } else {
    throw Error(ErrorCode::config, "unknown matrix '" + name + "' (table1, table2, table3, table4 or custom)");
  }
  return arms;
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    if (trim(tok).empty()) continue;
    const auto v = parse_int(tok);
    if (!v || *v < 0) throw Error(ErrorCode::config, "bad seed '" + tok + "'");
    seeds.push_back(static_cast<std::uint64_t>(*v));
  }
  return seeds;
}

/// Manifest text: `matrix = table1|table2|table3|table4|custom`, `seeds = 0,1,2`, any config key
/// for the shared base, and for custom matrices one `[arm.NAME]` section per arm holding that
/// arm's config overrides. Arms of a custom matrix run in name order.
inline Manifest parse_manifest(const KeyValues& kv) {
  Manifest m;
  std::map<std::string, Arm> custom;
  bool have_seeds = false;
  for (const auto& [key, value] : kv) {
    if (key == "matrix") {
      m.matrix = value;
    } else if (key == "seeds") {
      m.seeds = parse_seeds(value);
      have_seeds = true;
    } else if (key.rfind("arm.", 0) == 0) {
      const auto dot = key.find('.', 4);
      if (dot == std::string::npos) throw Error(ErrorCode::config, "arm key '" + key + "' lacks a config key");
      const std::string arm = key.substr(4, dot - 4);
      const std::string sub = key.substr(dot + 1);
      RunConfig probe;
      ise::apply(probe, sub, value);
      custom[arm].name = arm;
      custom[arm].overrides.emplace_back(sub, value);
    } else {
      ise::apply(m.base, key, value);
    }
  }
  if (!have_seeds) throw Error(ErrorCode::config, "manifest has no seeds");
  if (m.seeds.empty()) throw Error(ErrorCode::config, "manifest seed list is empty");
  if (m.matrix == "custom") {
    if (custom.empty()) throw Error(ErrorCode::config, "custom matrix has no [arm.NAME] sections");
    for (auto& [name, arm] : custom) m.arms.push_back(std::move(arm));
  } else {
    if (!custom.empty()) throw Error(ErrorCode::config, "[arm.*] sections need matrix = custom");
    m.arms = builtin_matrix(m.matrix);
  }
  return m;
}

inline std::string manifest_text(const Manifest& m) {
  std::string s = "matrix = " + m.matrix + "\nseeds = ";
  for (std::size_t i = 0; i < m.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(m.seeds[i]);
  s += "\n" + to_config_text(m.base);
  for (const auto& a : m.arms) {
    s += "\n[arm." + a.name + "]\n";
    for (const auto& [k, v] : a.overrides) s += k + " = " + v + "\n";
  }
  return s;
}

inline std::size_t thread_cap() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ISE_LAB_THREADS")) {
    const auto v = parse_int(env);
    if (!v || *v < 1) throw Error(ErrorCode::config, "ISE_LAB_THREADS must be a positive integer");
    n = static_cast<std::size_t>(*v);
  }
  return n;
}

inline constexpr std::array<std::string_view, 8> kSummaryMetrics{
    "fowlkes_mallows", "adjusted_rand", "adjusted_mutual_info", "v_measure", "map", "cmc1", "cmc5", "cmc10"};

inline std::array<double, 8> final_metrics(const EpochRecord& r) {
  return {r.quality.fowlkes_mallows, r.quality.adjusted_rand, r.quality.adjusted_mutual_info, r.quality.v_measure,
          r.retrieval.map, r.retrieval.cmc[0], r.retrieval.cmc[1], r.retrieval.cmc[2]};
}

struct ArmOutcome {
  std::vector<std::vector<EpochRecord>> runs;  // per seed, in manifest seed order
  std::optional<Error> error;
};

/// Runs every arm on every seed; arms of the same seed see one shared dataset.
inline std::vector<ArmOutcome> run_matrix(const Manifest& m, std::size_t threads) {
  std::vector<LabeledDataset> datasets;
  for (std::uint64_t seed : m.seeds) {
    RunConfig c = m.base;
    c.seed = seed;
    datasets.push_back(make_dataset(c));
  }
  std::vector<ArmOutcome> outcomes(m.arms.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t a; (a = next.fetch_add(1)) < m.arms.size();) {
      ArmOutcome& out = outcomes[a];
      try {
        for (std::size_t s = 0; s < m.seeds.size(); ++s) {
          RunConfig c = m.base;
          for (const auto& [k, v] : m.arms[a].overrides) ise::apply(c, k, v);
          c.seed = m.seeds[s];
          out.runs.push_back(run(datasets[s], c).records);
        }
      } catch (const Error& e) {
        out.error = e;
      } catch (const std::exception& e) {
        out.error = Error(ErrorCode::invariant, e.what());
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, m.arms.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return outcomes;
}

/// Writes `<arm>.csv` per arm (run.csv columns prefixed by seed), `ablation_summary.csv` with the
/// mean and sample standard deviation of final-epoch metrics, and the resolved `manifest.txt`.
inline int cmd_ablate(const Manifest& m, const fs::path& out_dir, std::ostream& err) {
  ensure_dir(out_dir);
  write_text(out_dir / "manifest.txt", manifest_text(m));
  const auto outcomes = run_matrix(m, thread_cap());

  std::string summary = "arm,seeds";
  for (auto name : kSummaryMetrics) summary += "," + std::string(name) + "_mean," + std::string(name) + "_std";
  summary += "\n";
  int status = kExitOk;
  for (std::size_t a = 0; a < m.arms.size(); ++a) {
    const ArmOutcome& o = outcomes[a];
    if (o.error) {
      report_error(err, o.error->code(), "arm " + m.arms[a].name + ": " + o.error->what());
      if (status == kExitOk) status = exit_code(o.error->code());
      continue;
    }
    std::string csv = "seed," + std::string(kRunCsvHeader) + "\n";
    std::vector<std::array<double, 8>> finals;
    for (std::size_t s = 0; s < o.runs.size(); ++s) {
      for (const auto& r : o.runs[s]) csv += std::to_string(m.seeds[s]) + "," + to_csv_row(r) + "\n";
      finals.push_back(final_metrics(o.runs[s].back()));
    }
    write_text(out_dir / (m.arms[a].name + ".csv"), csv);

    summary += m.arms[a].name + "," + std::to_string(finals.size());
    const auto n = static_cast<double>(finals.size());
    for (std::size_t k = 0; k < kSummaryMetrics.size(); ++k) {
      double mean = 0.0;
      for (const auto& f : finals) mean += f[k];
      mean /= n;
      double ss = 0.0;
      for (const auto& f : finals) ss += (f[k] - mean) * (f[k] - mean);
      const double sd = finals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      summary += "," + format_double(mean) + "," + format_double(sd);
    }
    summary += "\n";
  }
  write_text(out_dir / "ablation_summary.csv", summary);
  return status;
}

}  // namespace ise::cli
