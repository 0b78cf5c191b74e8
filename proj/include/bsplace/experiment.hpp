#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bsplace/baselines.hpp"
#include "bsplace/ppo.hpp"
#include "bsplace/reward.hpp"

namespace bsplace {

// Synthetic corpus description, or explicit PGM lists that replace a split.
struct CorpusSpec {
  int width = 64;
  int height = 64;
  double cell_size = 8.0;
  double density = 0.3;
  SizeRange building_size{10, 24};
  std::uint64_t train_seed = 100000;  // map k of the train split uses train_seed + k
  std::uint64_t test_seed = 900000;
  int train_count = 1100;
  int test_count = 50;
  std::vector<std::filesystem::path> train_files;
  std::vector<std::filesystem::path> test_files;
};

using MapList = std::vector<std::shared_ptr<const SiteMap>>;

MapList build_train_split(const CorpusSpec& corpus);
MapList build_test_split(const CorpusSpec& corpus);

// Every tunable of a run, read from a line-oriented `key = value` file.
struct ExperimentConfig {
  CorpusSpec corpus;

  // Radio. Unset optionals resolve from the cell size and threshold.
  RadioConfig radio;
  std::optional<double> min_distance_m;
  std::optional<double> noise_variance_w;

  std::string reward_preset{kDefaultRewardPreset};
  std::optional<double> pathgain_scale;  // unset: calibrate on the train split
  int calibration_samples = 256;

  PpoConfig ppo;
  int horizon = 1;
  int rollout_batch = 64;
  std::size_t cache_capacity = 4096;
  bool use_cache = true;

  std::uint64_t search_budget = 50;
  SearchMetric greedy_metric = SearchMetric::kCoverage;
  std::vector<std::string> schemes = {"heuristic", "autobs", "exhaustive_v", "exhaustive_c"};
  std::vector<int> n_bs = {1};
  std::filesystem::path checkpoint = "policy.bin";

  std::uint64_t seed = 0;

  // Throws ConfigError with a "line N:" prefix on the first bad line.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Applies one assignment; `where` prefixes error messages.
  void set(const std::string& key, const std::string& value, const std::string& where = {});

  RadioConfig resolved_radio() const;
  RewardWeights resolved_weights(const MapList& calibration_maps) const;

  // Canonical dump; parse(to_text()) reproduces the config.
  std::string to_text() const;
  void validate() const;
};

// One row of a placement experiment.
struct RunRecord {
  std::string scheme;
  int n_bs = 0;
  std::uint64_t map_id = 0;
  std::vector<Coord> placements;
  NetworkMetrics metrics;
  double elapsed_s = 0.0;
  std::uint64_t evaluations = 0;
};

inline constexpr std::string_view kRunRecordHeader =
    "scheme,n_bs,map_id,placements,coverage,capacity,pathgain_w,elapsed_s,evaluations";

std::string format_placements(const std::vector<Coord>& placements);
std::vector<Coord> parse_placements(std::string_view text);
std::string format_map_id(std::uint64_t id);

std::string csv_row(const RunRecord& r);
std::string run_records_csv(const std::vector<RunRecord>& rows);

}  // namespace bsplace
