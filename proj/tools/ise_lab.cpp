#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ise/cli.hpp"

int main(int argc, char** argv) {
  using namespace ise;
  using namespace ise::cli;

  CLI::App app{"ise_lab: pseudo-label contrastive training with implicit sample extension on an embedding table"};
  app.footer(std::string(kCsvHelp));
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  auto common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--set", overrides, "override a config key (key=value), repeatable")->allow_extra_args(false);
    cmd->add_option("--seed", seed, "run seed (also seeds the synthetic dataset)");
    if (with_out) cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    cmd->add_flag("--quiet", quiet, "suppress warnings");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "train one configuration; writes run.csv, summary.json, config.txt and "
                                                "final_embeddings.txt");
  common(run_cmd, true);

  std::string manifest_path;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run a matrix of arms over a seed list; writes <arm>.csv, "
                                                      "ablation_summary.csv and manifest.txt");
  ablate_cmd->add_option("manifest", manifest_path, "manifest file")->required();
  ablate_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  ablate_cmd->add_option("--set", overrides, "override a manifest key (key=value), repeatable");
  ablate_cmd->add_flag("--quiet", quiet, "suppress warnings");

  std::string dump_path;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a dataset dump; prints JSON on stdout");
  eval_cmd->add_option("dump", dump_path, "dataset dump (N d header, then id true_id split v...)")->required();
  common(eval_cmd, false);

  CLI::App* gen_cmd = app.add_subcommand("gen", "write the synthetic dataset as dataset.txt");
  common(gen_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error(std::cerr, ErrorCode::config, e.what());
    return kExitConfig;
  }
  set_quiet(quiet);

  return guarded(std::cerr, [&]() -> int {
    if (run_cmd->parsed()) return cmd_run(resolve_config(config_path, overrides, seed), out_dir);
    if (gen_cmd->parsed()) return cmd_gen(resolve_config(config_path, overrides, seed), out_dir);
    if (eval_cmd->parsed()) {
      const RunConfig cfg = resolve_config(config_path, overrides, seed);
      return cmd_eval(dump_path, cfg.cluster, std::cout);
    }
    KeyValues kv = read_key_values(manifest_path);
    for (const auto& o : overrides) {
      const auto [k, v] = parse_override(o);
      kv[k] = v;
    }
    return cmd_ablate(parse_manifest(kv), out_dir, std::cerr);
  });
}
