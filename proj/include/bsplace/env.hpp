#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bsplace/reward.hpp"

namespace bsplace {

// Power-channel window: dBm values mapped affinely onto [0, 1].
inline constexpr double kPowerWindowMinDbm = -120.0;
inline constexpr double kPowerWindowMaxDbm = -40.0;

double normalize_power_dbm(double dbm);

struct Observation {
  int width = 0;
  int height = 0;
  std::vector<float> occupancy;      // 1 = building
  std::vector<float> power;          // aggregate power in the dB window, 0 at t = 0
  std::vector<std::uint8_t> action_mask;  // B minus cells already used
  float step_fraction = 0.0f;        // t / T

  int input_size() const { return 2 * width * height + 1; }
  // Row-major occupancy, then row-major power, then t/T.
  std::vector<float> flatten() const;
};

struct EpisodeState {
  std::shared_ptr<const SiteMap> map;
  RadioConfig radio;
  int horizon = 1;
  int t = 0;
  std::vector<Coord> placements;
  std::vector<std::shared_ptr<const PathlossMap>> pathloss;  // one per placement
  std::optional<AggregatePowerMap> agg;
  std::optional<NetworkMetrics> prev_metrics;
  std::vector<std::uint8_t> used;  // per cell
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  NetworkMetrics metrics;
};

EpisodeState reset(std::shared_ptr<const SiteMap> map, const RadioConfig& radio, int horizon);

Observation observe(const EpisodeState& state);

bool admissible(const EpisodeState& state, Coord action);

// Appends the placement and returns the marginal reward. Throws on an
// inadmissible action or on a finished episode.
StepResult step(EpisodeState& state, Coord action, const RewardWeights& weights,
                TwinCache* cache = nullptr);

// "t,i,j,reward,coverage,capacity" rows for one episode.
struct TraceRow {
  int t = 0;
  Coord action;
  double reward = 0.0;
  double coverage = 0.0;
  double capacity = 0.0;
};
std::string trace_csv(const std::vector<TraceRow>& rows);

}  // namespace bsplace
