#pragma once

#include <span>
#include <string>

#include "bsplace/sitemap.hpp"
#include "bsplace/twin.hpp"
#include "bsplace/twin_cache.hpp"

namespace bsplace {

// Coverage and capacity are normalized by |R|; the raw sums are kept too.
struct NetworkMetrics {
  double coverage = 0.0;      // fraction of R with power >= thr
  double capacity = 0.0;      // mean log2(1 + SNR) over R, bits/s/Hz
  double pathgain_w = 0.0;    // sum of received power over R
  int covered_cells = 0;
  int r_cells = 0;
  double coverage_sum = 0.0;  // raw V
  double capacity_sum = 0.0;  // raw C

  friend bool operator==(const NetworkMetrics&, const NetworkMetrics&) = default;
};

double coverage(const AggregatePowerMap& agg, const RadioConfig& radio, const SiteMap& map);
double capacity(const AggregatePowerMap& agg, const RadioConfig& radio, const SiteMap& map);
double pathgain_total(const AggregatePowerMap& agg, const SiteMap& map);

// All three metrics from one aggregate.
NetworkMetrics measure(const AggregatePowerMap& agg, const RadioConfig& radio, const SiteMap& map);

// Predicts (through `cache` when given) and aggregates every placement.
NetworkMetrics evaluate(const SiteMap& map, const RadioConfig& radio,
                        std::span<const Coord> placements, TwinCache* cache = nullptr);

// "coverage,capacity,pathgain_w" with 6 significant digits.
std::string csv_fragment(const NetworkMetrics& m);

}  // namespace bsplace
