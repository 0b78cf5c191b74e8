#include "bsplace/twin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "bsplace/error.hpp"
#include "bsplace/hash.hpp"

namespace bsplace {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

RadioConfig RadioConfig::standard(double cell_size) {
  RadioConfig r;
  r.min_distance_m = cell_size / 2.0;
  r.noise_variance_w = r.threshold_watts() / 4.0;
  return r;
}

void RadioConfig::validate() const {
  if (!(carrier_freq_hz > 0.0)) throw Error("carrier frequency must be positive");
  if (!(min_distance_m > 0.0)) throw Error("min_distance must be positive");
  if (!(wall_loss_db >= 0.0)) throw Error("wall_loss must be non-negative");
  if (!(excess_loss_cap_db >= 0.0)) throw Error("excess_loss_cap must be non-negative");
  if (!(noise_variance_w > 0.0)) throw Error("noise variance must be positive");
}

std::uint64_t RadioConfig::id() const {
  Fnv1a64 h;
  for (double v : {carrier_freq_hz, tx_power_dbm, coverage_threshold_dbm, wall_loss_db,
                   excess_loss_cap_db, min_distance_m, noise_variance_w})
    h.scalar(v);
  return h.value();
}

namespace {

// Stops counting once `limit` walls have been seen.
int trace_walls_upto(const SiteMap& map, Coord a, Coord b, int limit) {
  if (b < a) std::swap(a, b);
  const int w = map.width();
  const long ni = std::abs(b.i - a.i);
  const long nj = std::abs(b.j - a.j);
  const int step_j = b.j > a.j ? 1 : -1;
  const int step_i = b.i > a.i ? w : -w;
  const std::uint8_t* occ = map.occupancy().data();
  const int end = b.i * w + b.j;

  // decision = (1 + 2 ix) ni - (1 + 2 iy) nj compares the segment parameters
  // of the next column crossing (ix + 1/2) / nj and row crossing (iy + 1/2) / ni,
  // where ix / iy count the boundaries crossed so far.
  long decision = ni - nj;
  int p = a.i * w + a.j;
  int count = 0;
  while (p != end) {
    if (decision == 0) [[unlikely]] {
      // Passes exactly through a lattice corner: both side cells are touched.
      count += occ[p + step_j] + occ[p + step_i];
      p += step_i + step_j;
      decision += 2 * ni - 2 * nj;
    } else {
      const bool across = decision < 0;  // next crossing is a column boundary
      p += across ? step_j : step_i;
      decision += across ? 2 * ni : -2 * nj;
    }
    if (p == end) break;
    count += occ[p];
    if (count >= limit) break;
  }
  return std::min(count, limit);
}

}  // namespace

int trace_walls(const SiteMap& map, Coord a, Coord b) {
  return trace_walls_upto(map, a, b, std::numeric_limits<int>::max());
}

namespace {

double frequency_term_db(const RadioConfig& radio) {
  return 20.0 * std::log10(radio.carrier_freq_hz / 1e6) + 32.44 - 60.0;
}

double distance_m(const SiteMap& map, Coord a, Coord b) {
  const double di = static_cast<double>(b.i - a.i);
  const double dj = static_cast<double>(b.j - a.j);
  return std::sqrt(di * di + dj * dj) * map.cell_size();
}

double distance_db(const SiteMap& map, const RadioConfig& radio, Coord tx, Coord rx) {
  return 20.0 * std::log10(std::max(distance_m(map, tx, rx), radio.min_distance_m));
}

// Smallest wall count whose penalty reaches the cap; counting further cannot
// change the loss.
int saturating_walls(const RadioConfig& radio) {
  if (radio.wall_loss_db <= 0.0) return 0;
  const double n = std::ceil(radio.excess_loss_cap_db / radio.wall_loss_db);
  return n >= 1e9 ? std::numeric_limits<int>::max() : static_cast<int>(n);
}

double excess_db(const RadioConfig& radio, int walls) {
  return std::min(radio.wall_loss_db * static_cast<double>(walls), radio.excess_loss_cap_db);
}

// Distance term for every absolute offset (di, dj), row-major over the map
// shape. Memoized per thread for the most recent geometry.
const std::vector<double>& distance_table(const SiteMap& map, const RadioConfig& radio) {
  thread_local std::vector<double> table;
  thread_local std::array<double, 4> key{-1.0, -1.0, -1.0, -1.0};
  const std::array<double, 4> want{static_cast<double>(map.width()),
                                   static_cast<double>(map.height()), map.cell_size(),
                                   radio.min_distance_m};
  if (want != key) {
    table.resize(static_cast<std::size_t>(map.cells()));
    for (int a = 0; a < map.height(); ++a)
      for (int b = 0; b < map.width(); ++b)
        table[a * map.width() + b] = distance_db(map, radio, {0, 0}, {a, b});
    key = want;
  }
  return table;
}

double loss_db(const SiteMap& map, const RadioConfig& radio, double freq_db, Coord tx,
               Coord rx) {
  const int walls = radio.wall_loss_db > 0.0 ? trace_walls(map, tx, rx) : 0;
  return distance_db(map, radio, tx, rx) + freq_db + excess_db(radio, walls);
}

}  // namespace

double pathloss_db(const SiteMap& map, const RadioConfig& radio, Coord tx, Coord rx) {
  return loss_db(map, radio, frequency_term_db(radio), tx, rx);
}

PathlossMap predict_pathloss(const SiteMap& map, const RadioConfig& radio, Coord bs) {
  if (!map.in_bounds(bs) || !map.deployable(bs))
    throw Error("base station " + to_string(bs) + " is not in the deployable set");
  radio.validate();

  PathlossMap out;
  out.width = map.width();
  out.height = map.height();
  out.source = bs;
  out.power.resize(static_cast<std::size_t>(map.cells()));
  const double freq_db = frequency_term_db(radio);
  const int limit = saturating_walls(radio);
  const int rows = map.height();
  const int cols = map.width();
  const std::vector<double>& dist_db = distance_table(map, radio);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const int walls = limit > 0 ? trace_walls_upto(map, bs, {i, j}, limit) : 0;
      const double pl =
          dist_db[std::abs(i - bs.i) * cols + std::abs(j - bs.j)] + freq_db + excess_db(radio, walls);
      const double rx_dbm = radio.tx_power_dbm - pl;
      out.power[static_cast<std::size_t>(i) * map.width() + j] =
          std::max(dbm_to_watts(rx_dbm), kPowerFloorWatts);
    }

  Fnv1a64 h;
  h.scalar(map.map_id());
  h.scalar(static_cast<std::int32_t>(bs.i));
  h.scalar(static_cast<std::int32_t>(bs.j));
  h.scalar(radio.id());
  out.map_id = h.value();
  return out;
}

AggregatePowerMap aggregate(std::span<const PathlossMap* const> maps) {
  if (maps.empty()) throw Error("aggregate of an empty source list");
  std::vector<const PathlossMap*> order(maps.begin(), maps.end());
  for (const auto* m : order)
    if (m->width != order[0]->width || m->height != order[0]->height)
      throw Error("aggregate: raster shape mismatch");
  std::stable_sort(order.begin(), order.end(),
                   [](const PathlossMap* a, const PathlossMap* b) { return a->source < b->source; });

  AggregatePowerMap agg;
  agg.width = order[0]->width;
  agg.height = order[0]->height;
  agg.power = order[0]->power;
  agg.sources.push_back(order[0]->source);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& p = order[k]->power;
    for (std::size_t c = 0; c < agg.power.size(); ++c) agg.power[c] += p[c];
    agg.sources.push_back(order[k]->source);
  }
  return agg;
}

AggregatePowerMap aggregate(std::span<const std::shared_ptr<const PathlossMap>> maps) {
  std::vector<const PathlossMap*> raw;
  raw.reserve(maps.size());
  for (const auto& m : maps) raw.push_back(m.get());
  return aggregate(std::span<const PathlossMap* const>(raw));
}

namespace {

double window_position(double power_w, double min_db, double max_db) {
  const double db = watts_to_dbm(power_w);
  const double t = (db - min_db) / (max_db - min_db);
  return std::clamp(t, 0.0, 1.0);
}

void check_window(std::span<const double> power_w, int width, int height, double min_db,
                  double max_db) {
  if (!(max_db > min_db)) throw Error("heatmap window must satisfy max_db > min_db");
  if (power_w.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error("heatmap raster size mismatch");
}

}  // namespace

GrayImage heatmap_gray(std::span<const double> power_w, int width, int height, double min_db,
                       double max_db) {
  check_window(power_w, width, height, min_db, max_db);
  GrayImage img{width, height, {}};
  img.pixels.reserve(power_w.size());
  for (double p : power_w)
    img.pixels.push_back(
        static_cast<std::uint8_t>(std::lround(255.0 * window_position(p, min_db, max_db))));
  return img;
}

RgbImage heatmap_color(std::span<const double> power_w, int width, int height, double min_db,
                       double max_db) {
  static constexpr std::array<std::array<double, 3>, 5> kRamp{{
      {0, 0, 0}, {0, 0, 255}, {0, 255, 255}, {255, 255, 0}, {255, 255, 255}}};
  check_window(power_w, width, height, min_db, max_db);
  RgbImage img{width, height, {}};
  img.pixels.reserve(power_w.size() * 3);
  for (double p : power_w) {
    const double t = window_position(p, min_db, max_db) * 4.0;
    const int k = std::min(static_cast<int>(t), 3);
    const double f = t - k;
    for (int ch = 0; ch < 3; ++ch) {
      const double v = kRamp[k][ch] + f * (kRamp[k + 1][ch] - kRamp[k][ch]);
      img.pixels.push_back(static_cast<std::uint8_t>(std::lround(v)));
    }
  }
  return img;
}

}  // namespace bsplace
