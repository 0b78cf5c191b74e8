#include "bsplace/env.hpp"

#include <algorithm>
#include <cstdio>

#include "bsplace/error.hpp"

namespace bsplace {

double normalize_power_dbm(double dbm) {
  const double t = (dbm - kPowerWindowMinDbm) / (kPowerWindowMaxDbm - kPowerWindowMinDbm);
  return std::clamp(t, 0.0, 1.0);
}

std::vector<float> Observation::flatten() const {
  std::vector<float> x;
  x.reserve(static_cast<std::size_t>(input_size()));
  x.insert(x.end(), occupancy.begin(), occupancy.end());
  x.insert(x.end(), power.begin(), power.end());
  x.push_back(step_fraction);
  return x;
}

EpisodeState reset(std::shared_ptr<const SiteMap> map, const RadioConfig& radio, int horizon) {
  if (!map) throw Error("reset needs a site map");
  if (horizon < 1) throw Error("horizon must be at least 1");
  if (horizon > map->deployable_count())
    throw Error("horizon " + std::to_string(horizon) + " exceeds the " +
                std::to_string(map->deployable_count()) + " deployable cells");
  radio.validate();
  EpisodeState s;
  s.radio = radio;
  s.horizon = horizon;
  s.used.assign(static_cast<std::size_t>(map->cells()), 0);
  s.map = std::move(map);
  return s;
}

Observation observe(const EpisodeState& state) {
  const SiteMap& map = *state.map;
  const auto n = static_cast<std::size_t>(map.cells());
  Observation obs;
  obs.width = map.width();
  obs.height = map.height();
  obs.occupancy.resize(n);
  obs.power.assign(n, 0.0f);
  obs.action_mask.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    obs.occupancy[k] = map.occupancy()[k] ? 1.0f : 0.0f;
    obs.action_mask[k] = (map.deployable_mask()[k] && !state.used[k]) ? 1 : 0;
  }
  if (state.agg)
    for (std::size_t k = 0; k < n; ++k)
      obs.power[k] = static_cast<float>(normalize_power_dbm(watts_to_dbm(state.agg->power[k])));
  obs.step_fraction = static_cast<float>(state.t) / static_cast<float>(state.horizon);
  return obs;
}

bool admissible(const EpisodeState& state, Coord action) {
  const SiteMap& map = *state.map;
  return map.in_bounds(action) && map.deployable(action) && !state.used[map.flat(action)];
}

StepResult step(EpisodeState& state, Coord action, const RewardWeights& weights,
                TwinCache* cache) {
  if (state.t >= state.horizon) throw Error("step called on a finished episode");
  if (!admissible(state, action))
    throw Error("inadmissible action " + to_string(action) +
                " (outside B or already used); the policy mask is broken");
  const SiteMap& map = *state.map;
  state.pathloss.push_back(cache ? cache->get_or_predict(map, state.radio, action)
                                 : std::make_shared<const PathlossMap>(
                                       predict_pathloss(map, state.radio, action)));
  state.placements.push_back(action);
  state.used[map.flat(action)] = 1;
  ++state.t;
  // Re-aggregated from scratch in canonical order so metrics match evaluate().
  state.agg = aggregate(std::span<const std::shared_ptr<const PathlossMap>>(state.pathloss));

  StepResult r;
  r.metrics = measure(*state.agg, state.radio, map);
  r.reward = step_reward(state.prev_metrics, r.metrics, weights);
  state.prev_metrics = r.metrics;
  r.done = state.t == state.horizon;
  r.observation = observe(state);
  return r;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = "t,i,j,reward,coverage,capacity\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6g,%.6g,%.6g\n", r.t, r.action.i, r.action.j,
                  r.reward, r.coverage, r.capacity);
    out += buf;
  }
  return out;
}

}  // namespace bsplace
