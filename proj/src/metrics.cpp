#include "bsplace/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "bsplace/error.hpp"

namespace bsplace {
namespace {

void check_shape(const AggregatePowerMap& agg, const SiteMap& map) {
  if (agg.width != map.width() || agg.height != map.height())
    throw Error("aggregate power map does not match the site map shape");
}

}  // namespace

double coverage(const AggregatePowerMap& agg, const RadioConfig& radio, const SiteMap& map) {
  return measure(agg, radio, map).coverage;
}

double capacity(const AggregatePowerMap& agg, const RadioConfig& radio, const SiteMap& map) {
  return measure(agg, radio, map).capacity;
}

double pathgain_total(const AggregatePowerMap& agg, const SiteMap& map) {
  check_shape(agg, map);
  double sum = 0.0;
  for (int k : map.receiver_indices()) sum += agg.power[k];
  return sum;
}

NetworkMetrics measure(const AggregatePowerMap& agg, const RadioConfig& radio,
                       const SiteMap& map) {
  check_shape(agg, map);
  if (!(radio.noise_variance_w > 0.0)) throw Error("noise variance must be positive");
  const double thr = radio.threshold_watts();
  const double inv_noise = 1.0 / radio.noise_variance_w;

  NetworkMetrics m;
  m.r_cells = map.receiver_count();
  for (int k : map.receiver_indices()) {
    const double p = agg.power[k];
    if (p >= thr) ++m.covered_cells;
    m.capacity_sum += std::log2(1.0 + p * inv_noise);
    m.pathgain_w += p;
  }
  m.coverage_sum = m.covered_cells;
  m.coverage = static_cast<double>(m.covered_cells) / m.r_cells;
  m.capacity = m.capacity_sum / m.r_cells;
  return m;
}

NetworkMetrics evaluate(const SiteMap& map, const RadioConfig& radio,
                        std::span<const Coord> placements, TwinCache* cache) {
  if (placements.empty()) throw Error("evaluate needs at least one placement");
  std::vector<std::shared_ptr<const PathlossMap>> maps;
  maps.reserve(placements.size());
  for (Coord c : placements) {
    if (!map.in_bounds(c) || !map.deployable(c))
      throw Error("placement " + to_string(c) + " is not in the deployable set");
    maps.push_back(cache ? cache->get_or_predict(map, radio, c)
                         : std::make_shared<const PathlossMap>(predict_pathloss(map, radio, c)));
  }
  return measure(aggregate(std::span<const std::shared_ptr<const PathlossMap>>(maps)), radio,
                 map);
}

std::string csv_fragment(const NetworkMetrics& m) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g", m.coverage, m.capacity, m.pathgain_w);
  return buf;
}

}  // namespace bsplace
