#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bsplace/image.hpp"
#include "bsplace/sitemap.hpp"

namespace bsplace {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Received-power floor applied to every predicted cell.
inline constexpr double kPowerFloorWatts = 1e-20;

struct RadioConfig {
  double carrier_freq_hz = 2.5e9;
  double tx_power_dbm = 0.0;
  double coverage_threshold_dbm = -90.015;
  double wall_loss_db = 10.0;       // per occupied cell crossed
  double excess_loss_cap_db = 60.0;
  double min_distance_m = 0.5;
  double noise_variance_w = 0.0;    // sigma^2
  // Recorded only; noise is derived from the threshold, not from kTB.
  double bandwidth_hz = 1e6;

  // Defaults for a map with the given cell size: min_distance = cell_size/2
  // and sigma^2 = thr/4 in linear watts (6 dB SNR at the coverage edge).
  static RadioConfig standard(double cell_size);

  double threshold_watts() const { return dbm_to_watts(coverage_threshold_dbm); }
  // Throws if an invariant is violated.
  void validate() const;
  std::uint64_t id() const;
};

// Received power (linear watts) from a single transmitter at every cell.
struct PathlossMap {
  int width = 0;
  int height = 0;
  std::vector<double> power;
  Coord source;
  std::uint64_t map_id = 0;
};

// Per-cell sum over several transmitters.
struct AggregatePowerMap {
  int width = 0;
  int height = 0;
  std::vector<double> power;
  std::vector<Coord> sources;  // canonical (sorted) order
};

// Occupied cells crossed by the segment between the centres of a and b
// (supercover traversal, endpoint cells excluded).
int trace_walls(const SiteMap& map, Coord a, Coord b);

// Log-distance free-space loss plus a capped per-wall penalty:
//   PL = 20 log10(max(d, dmin)) + 20 log10(f_MHz) + 32.44 - 60
//        + min(wall_loss * walls, cap)                 [dB, d in metres]
double pathloss_db(const SiteMap& map, const RadioConfig& radio, Coord tx, Coord rx);

PathlossMap predict_pathloss(const SiteMap& map, const RadioConfig& radio, Coord bs);

AggregatePowerMap aggregate(std::span<const PathlossMap* const> maps);
AggregatePowerMap aggregate(std::span<const std::shared_ptr<const PathlossMap>> maps);

// dB raster mapped affinely to [0,255] over [min_db, max_db] (clamped).
GrayImage heatmap_gray(std::span<const double> power_w, int width, int height,
                       double min_db, double max_db);
// Same window through a 5-stop false-colour ramp: black, blue, cyan, yellow,
// white at 0, 1/4, 1/2, 3/4, 1.
RgbImage heatmap_color(std::span<const double> power_w, int width, int height,
                       double min_db, double max_db);

}  // namespace bsplace
