#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bsplace/experiment.hpp"
#include "bsplace/twin_cache.hpp"

namespace bsplace {

// Shared state of one command invocation.
struct CommandContext {
  ExperimentConfig config;
  std::filesystem::path out_dir = ".";
  int threads = 0;  // 0 = hardware concurrency
  bool deterministic = false;
  std::ostream* log = nullptr;  // progress lines; null = silent

  int worker_count() const;
  std::filesystem::path output(const std::filesystem::path& name) const;
};

// ---------------------------------------------------------------- twin

struct TwinOutput {
  double min_dbm = 0.0;
  double max_dbm = 0.0;
  std::filesystem::path pgm;
  std::filesystem::path ppm;
};

// Writes twin.pgm / twin.ppm for a single transmitter at `bs`.
TwinOutput cmd_twin(const CommandContext& ctx, const SiteMap& map, Coord bs, double window_min_dbm,
                    double window_max_dbm);

// ------------------------------------------------------------- schemes

// Runs one placement scheme on one map and re-evaluates the result.
// elapsed_s covers the decision only: act_greedy calls for autobs, the
// search for the baselines. `stream` seeds the heuristic and budgeted
// searches.
RunRecord run_scheme(const std::string& scheme, const std::shared_ptr<const SiteMap>& map, int n_bs,
                     const RadioConfig& radio, const ExperimentConfig& config,
                     const PolicyNetwork* net, std::uint64_t stream, TwinCache* cache);

// Maps x n_bs x schemes in that nesting order. Maps run on worker threads
// unless the context is deterministic; row order never depends on timing.
std::vector<RunRecord> run_schemes(const CommandContext& ctx, const MapList& maps,
                                   const std::vector<std::string>& schemes,
                                   const std::vector<int>& n_bs, const PolicyNetwork* net);

struct SchemeSummary {
  std::string scheme;
  int n_bs = 0;
  int maps = 0;
  double coverage_median = 0.0, coverage_mean = 0.0;
  double capacity_median = 0.0, capacity_mean = 0.0;
  double elapsed_median = 0.0, elapsed_mean = 0.0;
};

double median(std::vector<double> v);
std::vector<SchemeSummary> summarize(const std::vector<RunRecord>& rows);
// Fixed-width table plus the autobs / exhaustive time ratio per n_bs.
std::string format_summary(const std::vector<SchemeSummary>& summary);

// Writes bench.csv and bench_summary.txt.
std::vector<RunRecord> cmd_bench(const CommandContext& ctx, const PolicyNetwork* net);

// ---------------------------------------------------------------- train

struct TrainOutput {
  TrainResult result;
  RewardWeights weights;
  std::filesystem::path checkpoint;
  std::filesystem::path curve;
};

// Trains on the train split, evaluating on the test split (or on the train
// split when the test split is empty). Writes the checkpoint, curve.csv and
// train_config.txt; on divergence the last finite network is saved.
TrainOutput cmd_train(const CommandContext& ctx);

// Runs cmd_train's pipeline on prebuilt splits without touching the disk.
TrainOutput train_on(const CommandContext& ctx, const MapList& train_maps, const MapList& eval_maps);

struct AblationRow {
  std::string preset;
  std::string label;
  double eval_coverage = 0.0;
  double eval_capacity = 0.0;
  double final_mean_reward = 0.0;
  std::vector<std::uint64_t> corpus_ids;
};

inline constexpr std::string_view kAblationHeader = "preset,label,eval_coverage,eval_capacity,final_mean_reward";

// One training run per reward preset over a shared corpus and seed. Writes
// ablation.csv and curve_<preset>.csv.
std::vector<AblationRow> cmd_ablate_rewards(const CommandContext& ctx);
std::string ablation_csv(const std::vector<AblationRow>& rows);

// ------------------------------------------------------------- gen-maps

// Writes map_<seed>.pgm for `count` synthetic maps plus maps.txt
// ("file,map_id" lines). Returns the written paths.
std::vector<std::filesystem::path> cmd_gen_maps(const CommandContext& ctx, int count,
                                                std::uint64_t first_seed);

// Checkpoint trailer lines describing the run that produced a network.
std::vector<std::pair<std::string, std::string>> checkpoint_metadata(const ExperimentConfig& config,
                                                                     const RewardWeights& weights);

}  // namespace bsplace
