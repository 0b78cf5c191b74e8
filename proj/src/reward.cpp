#include "bsplace/reward.hpp"

#include "bsplace/error.hpp"
#include "bsplace/rng.hpp"

namespace bsplace {

void RewardWeights::validate() const {
  if (nu1 < 0.0 || nu2 < 0.0 || nu3 < 0.0) throw ConfigError("reward weights must be >= 0");
  if (nu1 == 0.0 && nu2 == 0.0 && nu3 == 0.0)
    throw ConfigError("at least one reward weight must be positive");
  if (!(pathgain_scale > 0.0)) throw ConfigError("pathgain_scale must be positive");
}

RewardWeights preset(std::string_view name) {
  RewardWeights w;
  w.preset_name = std::string(name);
  if (name == "coverage_only") {
    w.nu1 = 1, w.nu2 = 0, w.nu3 = 0;
  } else if (name == "capacity_only") {
    w.nu1 = 0, w.nu2 = 1, w.nu3 = 0;
  } else if (name == "coverage_capacity") {
    w.nu1 = 1, w.nu2 = 1, w.nu3 = 0;
  } else if (name == "pathgain_capacity") {
    w.nu1 = 0, w.nu2 = 1, w.nu3 = 1;
  } else if (name == "pathgain_coverage") {
    w.nu1 = 1, w.nu2 = 0, w.nu3 = 1;
  } else {
    throw ConfigError("unknown reward preset '" + std::string(name) + "'");
  }
  return w;
}

std::string_view preset_label(std::string_view name) {
  if (name == "coverage_only") return "Coverage Only";
  if (name == "capacity_only") return "Capacity Only";
  if (name == "coverage_capacity") return "Coverage + Capacity";
  if (name == "pathgain_capacity") return "Pathgain + Capacity";
  if (name == "pathgain_coverage") return "Pathgain + Coverage";
  throw ConfigError("unknown reward preset '" + std::string(name) + "'");
}

double calibrate_pathgain_scale(std::span<const SiteMap> maps, const RadioConfig& radio,
                                int n_samples, std::uint64_t seed) {
  if (maps.empty()) throw Error("pathgain calibration needs at least one map");
  if (n_samples < 10) throw Error("pathgain calibration needs n_samples >= 10");
  Xoshiro256 rng(seed);
  double sum = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const SiteMap& map = maps[rng.uniform_index(maps.size())];
    const Coord bs = map.deployable_cells()[rng.uniform_index(map.deployable_cells().size())];
    const Coord one[] = {bs};
    sum += evaluate(map, radio, one).pathgain_w;
  }
  return static_cast<double>(n_samples) / sum;
}

double step_reward(const std::optional<NetworkMetrics>& prev, const NetworkMetrics& curr,
                   const RewardWeights& w) {
  const double dv = curr.coverage - (prev ? prev->coverage : 0.0);
  const double dc = curr.capacity - (prev ? prev->capacity : 0.0);
  const double dp = curr.pathgain_w - (prev ? prev->pathgain_w : 0.0);
  return w.nu1 * dv + w.nu2 * dc + w.nu3 * w.pathgain_scale * dp;
}

}  // namespace bsplace
