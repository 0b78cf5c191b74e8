#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsplace/metrics.hpp"

namespace bsplace {

// r = nu1 * dV + nu2 * dC + nu3 * pathgain_scale * dP
struct RewardWeights {
  double nu1 = 1.0;
  double nu2 = 0.0;
  double nu3 = 1.0;
  double pathgain_scale = 1.0;  // 1/W
  std::string preset_name = "pathgain_coverage";

  void validate() const;
};

// The five names accepted on the command line and in config files.
inline constexpr std::string_view kRewardPresets[] = {
    "coverage_only", "capacity_only", "coverage_capacity", "pathgain_capacity",
    "pathgain_coverage"};

inline constexpr std::string_view kDefaultRewardPreset = "pathgain_coverage";

RewardWeights preset(std::string_view name);

// Human-readable row label ("Pathgain + Coverage", ...).
std::string_view preset_label(std::string_view name);

// 1 / mean pathgain of one uniformly random BS, over n_samples draws that
// each pick a map uniformly from `maps`.
double calibrate_pathgain_scale(std::span<const SiteMap> maps, const RadioConfig& radio,
                                int n_samples, std::uint64_t seed);

// Marginal reward of the latest deployment; prev is empty on the first step.
double step_reward(const std::optional<NetworkMetrics>& prev, const NetworkMetrics& curr,
                   const RewardWeights& w);

}  // namespace bsplace
