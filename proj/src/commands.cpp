#include "bsplace/commands.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "bsplace/error.hpp"
#include "bsplace/image.hpp"

namespace bsplace {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void log_line(const CommandContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n' << std::flush;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

int CommandContext::worker_count() const {
  if (deterministic) return 1;
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::filesystem::path CommandContext::output(const std::filesystem::path& name) const {
  std::filesystem::create_directories(out_dir);
  return name.is_absolute() ? name : out_dir / name;
}

// ---------------------------------------------------------------- twin

TwinOutput cmd_twin(const CommandContext& ctx, const SiteMap& map, Coord bs, double window_min_dbm,
                    double window_max_dbm) {
  if (!(window_min_dbm < window_max_dbm)) throw ConfigError("heatmap window must satisfy min < max");
  const PathlossMap p = predict_pathloss(map, ctx.config.resolved_radio(), bs);
  TwinOutput out;
  out.min_dbm = std::numeric_limits<double>::infinity();
  out.max_dbm = -std::numeric_limits<double>::infinity();
  for (double w : p.power) {
    out.min_dbm = std::min(out.min_dbm, watts_to_dbm(w));
    out.max_dbm = std::max(out.max_dbm, watts_to_dbm(w));
  }
  out.pgm = ctx.output("twin.pgm");
  out.ppm = ctx.output("twin.ppm");
  write_file(out.pgm, encode_pgm(heatmap_gray(p.power, p.width, p.height, window_min_dbm, window_max_dbm)));
  write_file(out.ppm, encode_ppm(heatmap_color(p.power, p.width, p.height, window_min_dbm, window_max_dbm)));
  return out;
}

// ------------------------------------------------------------- schemes

RunRecord run_scheme(const std::string& scheme, const std::shared_ptr<const SiteMap>& map, int n_bs,
                     const RadioConfig& radio, const ExperimentConfig& config,
                     const PolicyNetwork* net, std::uint64_t stream, TwinCache* cache) {
  RunRecord r;
  r.scheme = scheme;
  r.n_bs = n_bs;
  r.map_id = map->map_id();

  if (scheme == "heuristic") {
    Xoshiro256 rng(derive_seed(stream, static_cast<std::uint64_t>(n_bs)));
    const auto t0 = Clock::now();
    r.placements = heuristic_place(*map, n_bs, rng);
    r.elapsed_s = seconds_since(t0);
  } else if (scheme == "autobs") {
    if (!net) throw ConfigError("scheme autobs needs a checkpoint");
    if (net->shape().map_width != map->width() || net->shape().map_height != map->height())
      throw Error("checkpoint was trained for " + std::to_string(net->shape().map_width) + "x" +
                  std::to_string(net->shape().map_height) + " maps");
    EpisodeState state = reset(map, radio, n_bs);
    const RewardWeights weights = preset(kDefaultRewardPreset);
    for (int t = 0; t < n_bs; ++t) {
      const Observation obs = observe(state);
      const auto t0 = Clock::now();
      const Coord a = act_greedy(*net, obs);
      r.elapsed_s += seconds_since(t0);
      step(state, a, weights, cache);
    }
    r.placements = state.placements;
    r.evaluations = static_cast<std::uint64_t>(n_bs);
  } else if (scheme == "exhaustive_v" || scheme == "exhaustive_c") {
    const SearchMetric metric = scheme == "exhaustive_v" ? SearchMetric::kCoverage : SearchMetric::kCapacity;
    if (cache) cache->clear();
    SearchResult s;
    const auto t0 = Clock::now();
    if (n_bs == 1) {
      s = exhaustive_single(*map, radio, metric, 1);
    } else {
      SearchBudget budget;
      budget.max_evaluations = config.search_budget;
      budget.metric = metric;
      budget.seed = derive_seed(stream, 1000 + static_cast<std::uint64_t>(n_bs));
      s = exhaustive_multi(*map, radio, n_bs, budget);
    }
    r.elapsed_s = seconds_since(t0);
    r.placements = s.placements;
    r.evaluations = s.evaluations;
  } else if (scheme == "greedy") {
    const auto t0 = Clock::now();
    const SearchResult s = greedy_sequential(*map, radio, n_bs, config.greedy_metric);
    r.elapsed_s = seconds_since(t0);
    r.placements = s.placements;
    r.evaluations = s.evaluations;
  } else {
    throw ConfigError("unknown scheme '" + scheme + "'");
  }
  r.metrics = evaluate(*map, radio, r.placements, cache);
  return r;
}

std::vector<RunRecord> run_schemes(const CommandContext& ctx, const MapList& maps,
                                   const std::vector<std::string>& schemes,
                                   const std::vector<int>& n_bs, const PolicyNetwork* net) {
  const ExperimentConfig& cfg = ctx.config;
  const RadioConfig radio = cfg.resolved_radio();
  std::unique_ptr<TwinCache> cache;
  if (cfg.use_cache) cache = std::make_unique<TwinCache>(cfg.cache_capacity);

  std::vector<std::vector<RunRecord>> per_map(maps.size());
  auto run_map = [&](std::size_t m) {
    for (int n : n_bs)
      for (const auto& s : schemes)
        per_map[m].push_back(run_scheme(s, maps[m], n, radio, cfg, net, derive_seed(cfg.seed, m), cache.get()));
  };

  const int workers = std::min<int>(ctx.worker_count(), static_cast<int>(maps.size()));
  if (workers <= 1) {
    for (std::size_t m = 0; m < maps.size(); ++m) {
      run_map(m);
      log_line(ctx, "map " + std::to_string(m + 1) + "/" + std::to_string(maps.size()) + " done");
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t m; (m = next.fetch_add(1)) < maps.size();) {
            try {
              run_map(m);
            } catch (...) {
              std::lock_guard lock(failure_mu);
              if (!failure) failure = std::current_exception();
              next = maps.size();
            }
          }
        });
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<RunRecord> rows;
  for (auto& v : per_map)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<SchemeSummary> summarize(const std::vector<RunRecord>& rows) {
  std::vector<SchemeSummary> out;
  std::map<std::pair<int, std::string>, std::size_t> slot;
  std::vector<std::array<std::vector<double>, 3>> columns;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.n_bs, r.scheme);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      out.push_back({r.scheme, r.n_bs});
      columns.emplace_back();
    }
    auto& c = columns[it->second];
    c[0].push_back(r.metrics.coverage);
    c[1].push_back(r.metrics.capacity);
    c[2].push_back(r.elapsed_s);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    const auto& c = columns[k];
    s.maps = static_cast<int>(c[0].size());
    s.coverage_median = median(c[0]);
    s.coverage_mean = mean(c[0]);
    s.capacity_median = median(c[1]);
    s.capacity_mean = mean(c[1]);
    s.elapsed_median = median(c[2]);
    s.elapsed_mean = mean(c[2]);
  }
  return out;
}

std::string format_summary(const std::vector<SchemeSummary>& summary) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-13s %4s %5s %10s %10s %10s %10s %12s %12s\n", "scheme", "n_bs",
                "maps", "cov_med", "cov_mean", "cap_med", "cap_mean", "time_med_s", "time_mean_s");
  out += line;
  for (const auto& s : summary) {
    std::snprintf(line, sizeof line, "%-13s %4d %5d %10.4f %10.4f %10.4f %10.4f %12.6g %12.6g\n",
                  s.scheme.c_str(), s.n_bs, s.maps, s.coverage_median, s.coverage_mean,
                  s.capacity_median, s.capacity_mean, s.elapsed_median, s.elapsed_mean);
    out += line;
  }
  for (const auto& a : summary) {
    if (a.scheme != "autobs") continue;
    for (const auto& e : summary) {
      if (e.n_bs != a.n_bs || e.scheme.rfind("exhaustive", 0) != 0 || !(e.elapsed_median > 0.0)) continue;
      const double ratio = a.elapsed_median / e.elapsed_median;
      std::snprintf(line, sizeof line, "time ratio autobs/%s (n_bs=%d): %.6g (1/%.0f)\n", e.scheme.c_str(),
                    a.n_bs, ratio, ratio > 0.0 ? 1.0 / ratio : 0.0);
      out += line;
    }
  }
  return out;
}

std::vector<RunRecord> cmd_bench(const CommandContext& ctx, const PolicyNetwork* net) {
  const auto& cfg = ctx.config;
  const bool wants_net = std::ranges::find(cfg.schemes, "autobs") != cfg.schemes.end();
  if (wants_net && !net) throw ConfigError("bench with scheme autobs needs a checkpoint");
  const MapList maps = build_test_split(cfg.corpus);
  if (maps.empty()) throw ConfigError("bench needs a non-empty test split");
  const auto rows = run_schemes(ctx, maps, cfg.schemes, cfg.n_bs, net);
  write_text(ctx.output("bench.csv"), run_records_csv(rows));
  const std::string summary = format_summary(summarize(rows));
  write_text(ctx.output("bench_summary.txt"), summary);
  if (ctx.log) *ctx.log << summary << std::flush;
  return rows;
}

// ---------------------------------------------------------------- train

std::vector<std::pair<std::string, std::string>> checkpoint_metadata(const ExperimentConfig& config,
                                                                     const RewardWeights& weights) {
  auto lines = config.ppo.to_lines();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", weights.pathgain_scale);
  lines.emplace_back("reward_preset", config.reward_preset);
  lines.emplace_back("pathgain_scale", buf);
  lines.emplace_back("horizon", std::to_string(config.horizon));
  lines.emplace_back("cell_size", fixed(config.corpus.cell_size, 6));
  return lines;
}

TrainOutput train_on(const CommandContext& ctx, const MapList& train_maps, const MapList& eval_maps) {
  const ExperimentConfig& cfg = ctx.config;
  TrainSetup setup;
  setup.train_maps = train_maps;
  setup.eval_maps = eval_maps;
  setup.radio = cfg.resolved_radio();
  setup.horizon = cfg.horizon;
  setup.ppo = cfg.ppo;
  setup.ppo.seed = cfg.seed;
  setup.rollout_batch = cfg.rollout_batch;
  std::unique_ptr<TwinCache> cache;
  if (cfg.use_cache) {
    cache = std::make_unique<TwinCache>(cfg.cache_capacity);
    setup.cache = cache.get();
  }

  TrainOutput out;
  out.weights = cfg.resolved_weights(train_maps);
  setup.weights = out.weights;
  const std::int64_t iterations = (setup.ppo.total_env_steps + setup.ppo.rollout_size - 1) / setup.ppo.rollout_size;
  const auto t0 = Clock::now();
  out.result = train(setup, [&](const CurveRow& row, const UpdateStats& st, const PolicyNetwork&) {
    if (!ctx.log) return;
    char line[200];
    std::snprintf(line, sizeof line,
                  "iteration %d/%lld steps %lld reward %.4f eval_coverage %.4f eval_capacity %.4f "
                  "entropy %.3f kl %.4f %.1fs",
                  row.iteration, static_cast<long long>(iterations), static_cast<long long>(row.env_steps),
                  row.mean_reward, row.eval_coverage, row.eval_capacity, st.entropy, st.approx_kl,
                  seconds_since(t0));
    log_line(ctx, line);
  });
  return out;
}

TrainOutput cmd_train(const CommandContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const MapList train_maps = build_train_split(cfg.corpus);
  const MapList test_maps = build_test_split(cfg.corpus);
  if (train_maps.empty()) throw ConfigError("train split is empty");
  log_line(ctx, "corpus: " + std::to_string(train_maps.size()) + " train / " +
                    std::to_string(test_maps.size()) + " test maps");

  TrainOutput out = train_on(ctx, train_maps, test_maps);
  out.checkpoint = ctx.output(cfg.checkpoint);
  out.curve = ctx.output("curve.csv");
  save_checkpoint(out.checkpoint, out.result.network, checkpoint_metadata(cfg, out.weights));
  write_text(out.curve, curve_csv(out.result.curve));
  write_text(ctx.output("train_config.txt"), cfg.to_text());
  if (out.result.diverged) log_line(ctx, "diverged: " + out.result.message);
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out(kAblationHeader);
  out += '\n';
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g", r.eval_coverage, r.eval_capacity, r.final_mean_reward);
    out += r.preset + ",\"" + r.label + "\"," + buf + '\n';
  }
  return out;
}

std::vector<AblationRow> cmd_ablate_rewards(const CommandContext& ctx) {
  const MapList train_maps = build_train_split(ctx.config.corpus);
  const MapList test_maps = build_test_split(ctx.config.corpus);
  if (train_maps.empty()) throw ConfigError("train split is empty");

  std::vector<AblationRow> rows;
  for (std::string_view name : kRewardPresets) {
    CommandContext run = ctx;
    run.config.reward_preset = std::string(name);
    log_line(ctx, "preset " + std::string(name));
    const TrainOutput t = train_on(run, train_maps, test_maps);
    if (t.result.diverged) throw DivergenceError("preset " + std::string(name) + ": " + t.result.message);
    AblationRow row;
    row.preset = std::string(name);
    row.label = std::string(preset_label(name));
    if (!t.result.curve.empty()) {
      row.eval_coverage = t.result.curve.back().eval_coverage;
      row.eval_capacity = t.result.curve.back().eval_capacity;
      row.final_mean_reward = t.result.curve.back().mean_reward;
    }
    for (const auto& m : train_maps) row.corpus_ids.push_back(m->map_id());
    write_text(ctx.output("curve_" + row.preset + ".csv"), curve_csv(t.result.curve));
    rows.push_back(std::move(row));
  }
  write_text(ctx.output("ablation.csv"), ablation_csv(rows));
  return rows;
}

// ------------------------------------------------------------- gen-maps

std::vector<std::filesystem::path> cmd_gen_maps(const CommandContext& ctx, int count, std::uint64_t first_seed) {
  if (count < 1) throw ConfigError("gen-maps needs count >= 1");
  const CorpusSpec& c = ctx.config.corpus;
  std::vector<std::filesystem::path> files;
  std::string manifest = "file,map_id\n";
  for (int k = 0; k < count; ++k) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(k);
    const SiteMap m = generate_synthetic(seed, c.width, c.height, c.cell_size, c.density, c.building_size);
    const auto name = "map_" + std::to_string(seed) + ".pgm";
    const auto path = ctx.output(name);
    write_file(path, save_sitemap(m).raster);
    files.push_back(path);
    manifest += name + "," + format_map_id(m.map_id()) + "\n";
  }
  write_text(ctx.output("maps.txt"), manifest);
  return files;
}

}  // namespace bsplace
