#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bsplace/commands.hpp"
#include "bsplace/error.hpp"
#include "bsplace/image.hpp"

using namespace bsplace;

namespace {

enum Exit { kOk = 0, kConfig = 2, kRuntime = 3, kDiverged = 4 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 0;
  bool deterministic = false;
  std::vector<std::string> overrides;  // key=value
};

CommandContext make_context(const Globals& g) {
  CommandContext ctx;
  if (!g.config_path.empty()) ctx.config = ExperimentConfig::load(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    ctx.config.set(kv.substr(0, eq), kv.substr(eq + 1), "--set " + kv + ": ");
  }
  if (g.seed) ctx.config.set("seed", std::to_string(*g.seed));
  ctx.config.validate();
  ctx.out_dir = g.out;
  ctx.threads = g.threads;
  ctx.deterministic = g.deterministic;
  ctx.log = &std::cerr;
  return ctx;
}

// --map FILE, otherwise a synthetic map from the corpus settings.
struct MapSource {
  std::string file;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--map", file, "Site map PGM (masks read from <stem>.deployable.pgm / .receiver.pgm)");
    cmd->add_option("--map-seed", seed, "Synthetic map seed (default: test_seed)");
  }

  std::shared_ptr<const SiteMap> resolve(const ExperimentConfig& cfg) const {
    CorpusSpec c = cfg.corpus;
    if (!file.empty()) {
      c.test_files = {file};
    } else {
      c.test_files.clear();
      c.test_seed = seed.value_or(c.test_seed);
      c.test_count = 1;
    }
    return build_test_split(c).front();
  }
};

PolicyNetwork load_policy(const CommandContext& ctx, const std::string& flag) {
  const std::filesystem::path p = flag.empty() ? ctx.config.checkpoint : std::filesystem::path(flag);
  if (std::filesystem::exists(p)) return load_checkpoint(p);
  if (p.is_relative() && std::filesystem::exists(ctx.out_dir / p)) return load_checkpoint(ctx.out_dir / p);
  throw ConfigError("checkpoint not found: " + p.string());
}

MapList test_maps_or(const CommandContext& ctx, const MapSource& src) {
  if (!src.file.empty() || src.seed) return {src.resolve(ctx.config)};
  MapList maps = build_test_split(ctx.config.corpus);
  if (maps.empty()) throw ConfigError("test split is empty");
  return maps;
}

void emit_rows(const CommandContext& ctx, const std::string& name, const std::vector<RunRecord>& rows) {
  const std::string csv = run_records_csv(rows);
  write_text(ctx.output(name), csv);
  std::cout << csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Base station placement experiments on synthetic site maps"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
  app.add_flag("--deterministic", g.deterministic, "Single worker, reproducible row order");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)")->allow_extra_args(false);

  int code = kOk;

  // twin
  auto* twin = app.add_subcommand("twin", "Pathloss heatmaps for one transmitter");
  MapSource twin_map;
  twin_map.add_to(twin);
  std::string twin_bs;
  double win_min = -140.0, win_max = -40.0;
  twin->add_option("--bs", twin_bs, "Transmitter cell i:j")->required();
  twin->add_option("--min-dbm", win_min, "Heatmap window lower bound");
  twin->add_option("--max-dbm", win_max, "Heatmap window upper bound");
  twin->callback([&] {
    const CommandContext ctx = make_context(g);
    const auto map = twin_map.resolve(ctx.config);
    const TwinOutput o = cmd_twin(ctx, *map, parse_placements(twin_bs).at(0), win_min, win_max);
    std::printf("min_dbm %.4f\nmax_dbm %.4f\n%s\n%s\n", o.min_dbm, o.max_dbm, o.pgm.string().c_str(),
                o.ppm.string().c_str());
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Metrics of given placements");
  MapSource eval_map;
  eval_map.add_to(eval);
  std::string eval_bs;
  eval->add_option("--bs", eval_bs, "Placements i:j;i:j")->required();
  eval->callback([&] {
    const CommandContext ctx = make_context(g);
    const auto map = eval_map.resolve(ctx.config);
    const NetworkMetrics m = evaluate(*map, ctx.config.resolved_radio(), parse_placements(eval_bs));
    std::printf("map_id,coverage,capacity,pathgain_w\n%s,%s\n", format_map_id(map->map_id()).c_str(),
                csv_fragment(m).c_str());
  });

  // heuristic / exhaustive / greedy / deploy share the row emitter.
  struct SchemeCommand {
    CLI::App* cmd;
    MapSource maps;
    int n = 1;
    std::string metric = "coverage";
    std::string checkpoint;
  };
  auto heuristic = std::make_unique<SchemeCommand>();
  heuristic->cmd = app.add_subcommand("heuristic", "Uniform random placement on the test split");
  auto exhaustive = std::make_unique<SchemeCommand>();
  exhaustive->cmd = app.add_subcommand("exhaustive", "Exhaustive search on the test split");
  auto greedy = std::make_unique<SchemeCommand>();
  greedy->cmd = app.add_subcommand("greedy", "Greedy sequential search on the test split");
  auto deploy = std::make_unique<SchemeCommand>();
  deploy->cmd = app.add_subcommand("deploy", "Greedy policy placement from a checkpoint");
  for (auto* s : {heuristic.get(), exhaustive.get(), greedy.get(), deploy.get()}) {
    s->maps.add_to(s->cmd);
    s->cmd->add_option("--n", s->n, "Number of base stations")->check(CLI::PositiveNumber);
  }
  exhaustive->cmd->add_option("--metric", exhaustive->metric, "coverage | capacity");
  greedy->cmd->add_option("--metric", greedy->metric, "coverage | capacity");
  deploy->cmd->add_option("--checkpoint", deploy->checkpoint, "Policy checkpoint (default: config)");

  heuristic->cmd->callback([&] {
    const CommandContext ctx = make_context(g);
    emit_rows(ctx, "heuristic.csv", run_schemes(ctx, test_maps_or(ctx, heuristic->maps), {"heuristic"}, {heuristic->n}, nullptr));
  });
  exhaustive->cmd->callback([&] {
    const CommandContext ctx = make_context(g);
    const std::string scheme = parse_search_metric(exhaustive->metric) == SearchMetric::kCoverage ? "exhaustive_v" : "exhaustive_c";
    emit_rows(ctx, "exhaustive.csv", run_schemes(ctx, test_maps_or(ctx, exhaustive->maps), {scheme}, {exhaustive->n}, nullptr));
  });
  greedy->cmd->callback([&] {
    CommandContext ctx = make_context(g);
    ctx.config.greedy_metric = parse_search_metric(greedy->metric);
    emit_rows(ctx, "greedy.csv", run_schemes(ctx, test_maps_or(ctx, greedy->maps), {"greedy"}, {greedy->n}, nullptr));
  });
  deploy->cmd->callback([&] {
    const CommandContext ctx = make_context(g);
    const PolicyNetwork net = load_policy(ctx, deploy->checkpoint);
    emit_rows(ctx, "deploy.csv", run_schemes(ctx, test_maps_or(ctx, deploy->maps), {"autobs"}, {deploy->n}, &net));
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a placement policy");
  train_cmd->callback([&] {
    const CommandContext ctx = make_context(g);
    const TrainOutput t = cmd_train(ctx);
    std::printf("%s\n%s\n", t.checkpoint.string().c_str(), t.curve.string().c_str());
    if (t.result.diverged) code = kDiverged;
  });

  // bench
  auto* bench = app.add_subcommand("bench", "All configured schemes on the test split, with timing");
  std::string bench_ckpt;
  bench->add_option("--checkpoint", bench_ckpt, "Policy checkpoint (default: config)");
  bench->callback([&] {
    const CommandContext ctx = make_context(g);
    std::optional<PolicyNetwork> net;
    if (std::ranges::find(ctx.config.schemes, "autobs") != ctx.config.schemes.end())
      net = load_policy(ctx, bench_ckpt);
    cmd_bench(ctx, net ? &*net : nullptr);
  });

  // ablate-rewards
  auto* ablate = app.add_subcommand("ablate-rewards", "One training run per reward preset");
  ablate->callback([&] {
    const CommandContext ctx = make_context(g);
    std::cout << ablation_csv(cmd_ablate_rewards(ctx));
  });

  // gen-maps
  auto* gen = app.add_subcommand("gen-maps", "Write synthetic site maps as PGM");
  int gen_count = 0;
  std::optional<std::uint64_t> gen_first;
  gen->add_option("--count", gen_count, "Number of maps (default: test_count)");
  gen->add_option("--first-seed", gen_first, "Seed of the first map (default: test_seed)");
  gen->callback([&] {
    const CommandContext ctx = make_context(g);
    const int count = gen_count > 0 ? gen_count : ctx.config.corpus.test_count;
    for (const auto& p : cmd_gen_maps(ctx, count, gen_first.value_or(ctx.config.corpus.test_seed)))
      std::printf("%s\n", p.string().c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return code;
}
