#include "bsplace/sitemap.hpp"

#include <algorithm>
#include <cmath>

#include "bsplace/error.hpp"
#include "bsplace/hash.hpp"
#include "bsplace/image.hpp"
#include "bsplace/rng.hpp"

namespace bsplace {

std::string to_string(const Coord& c) {
  return std::to_string(c.i) + ":" + std::to_string(c.j);
}

SiteMap::SiteMap(int width, int height, double cell_size, std::vector<std::uint8_t> occupancy,
                 std::vector<std::uint8_t> deployable, std::vector<std::uint8_t> receiver,
                 bool deployable_override)
    : width_(width),
      height_(height),
      cell_size_(cell_size),
      occupancy_(std::move(occupancy)),
      deployable_(std::move(deployable)),
      receiver_(std::move(receiver)) {
  if (width_ <= 0 || height_ <= 0) throw Error("site map dimensions must be positive");
  if (!(cell_size_ > 0.0)) throw Error("cell_size must be positive");
  const auto n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  if (occupancy_.size() != n || deployable_.size() != n || receiver_.size() != n)
    throw Error("site map raster sizes do not match dimensions");

  for (auto* v : {&occupancy_, &deployable_, &receiver_})
    for (auto& b : *v) b = b ? 1 : 0;

  for (std::size_t k = 0; k < n; ++k) {
    if (receiver_[k] && occupancy_[k])
      throw Error("receiver region intersects a building cell");
    if (deployable_[k] && occupancy_[k] && !deployable_override)
      throw Error("deployable cell on a building without an override mask");
    if (deployable_[k]) deployable_cells_.push_back(coord(static_cast<int>(k)));
    if (receiver_[k]) receiver_indices_.push_back(static_cast<int>(k));
  }
  if (deployable_cells_.empty()) throw Error("empty deployable set");
  if (receiver_indices_.empty()) throw Error("empty receiver region");

  Fnv1a64 h;
  h.scalar(static_cast<std::uint32_t>(width_));
  h.scalar(static_cast<std::uint32_t>(height_));
  h.scalar(cell_size_);
  h.bytes(occupancy_);
  h.bytes(deployable_);
  h.bytes(receiver_);
  map_id_ = h.value();
}

SiteMap SiteMap::from_occupancy(int width, int height, double cell_size,
                                std::vector<std::uint8_t> occupancy) {
  std::vector<std::uint8_t> open(occupancy.size());
  for (std::size_t k = 0; k < occupancy.size(); ++k) open[k] = occupancy[k] ? 0 : 1;
  return SiteMap(width, height, cell_size, std::move(occupancy), open, open);
}

double SiteMap::occupied_fraction() const {
  const auto n = std::count(occupancy_.begin(), occupancy_.end(), 1);
  return static_cast<double>(n) / static_cast<double>(cells());
}

SiteMap load_sitemap(std::span<const std::uint8_t> raster, double cell_size,
                     std::optional<std::span<const std::uint8_t>> deployable_mask,
                     std::optional<std::span<const std::uint8_t>> receiver_mask) {
  const GrayImage img = decode_pgm(raster);
  std::vector<std::uint8_t> occ(img.pixels.size());
  std::vector<std::uint8_t> open(img.pixels.size());
  for (std::size_t k = 0; k < occ.size(); ++k) {
    occ[k] = img.pixels[k] >= 128 ? 1 : 0;
    open[k] = 1 - occ[k];
  }

  auto load_mask = [&](std::span<const std::uint8_t> bytes) {
    GrayImage m = decode_pgm(bytes);
    if (m.width != img.width || m.height != img.height)
      throw Error("mask dimensions do not match the raster");
    for (auto& p : m.pixels) p = p ? 1 : 0;
    return m.pixels;
  };

  std::vector<std::uint8_t> dep = deployable_mask ? load_mask(*deployable_mask) : open;
  std::vector<std::uint8_t> rec = receiver_mask ? load_mask(*receiver_mask) : open;
  return SiteMap(img.width, img.height, cell_size, std::move(occ), std::move(dep),
                 std::move(rec), deployable_mask.has_value());
}

SavedSiteMap save_sitemap(const SiteMap& map) {
  auto to_pgm = [&](std::span<const std::uint8_t> bits) {
    GrayImage img{map.width(), map.height(), {}};
    img.pixels.reserve(bits.size());
    for (auto b : bits) img.pixels.push_back(b ? 255 : 0);
    return encode_pgm(img);
  };
  return {to_pgm(map.occupancy()), to_pgm(map.deployable_mask()),
          to_pgm(map.receiver_mask())};
}

namespace {

bool has_open_3x3(const std::vector<std::uint8_t>& occ, int w, int h) {
  for (int i = 0; i + 3 <= h; ++i)
    for (int j = 0; j + 3 <= w; ++j) {
      bool open = true;
      for (int di = 0; di < 3 && open; ++di)
        for (int dj = 0; dj < 3 && open; ++dj) open = occ[(i + di) * w + j + dj] == 0;
      if (open) return true;
    }
  return false;
}

}  // namespace

SiteMap generate_synthetic(std::uint64_t seed, int width, int height, double cell_size,
                           double building_density, SizeRange building_size) {
  if (width < 3 || height < 3) throw Error("synthetic maps need at least 3x3 cells");
  if (!(building_density >= 0.0 && building_density < 0.9))
    throw Error("building_density must lie in [0, 0.9)");
  if (building_size.min < 1 || building_size.max < building_size.min)
    throw Error("invalid building size range");
  const int max_w = std::min(building_size.max, width);
  const int max_h = std::min(building_size.max, height);
  const int min_w = std::min(building_size.min, max_w);
  const int min_h = std::min(building_size.min, max_h);

  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const auto target = static_cast<std::size_t>(
      std::ceil(building_density * static_cast<double>(n) - 1e-9));

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Xoshiro256 rng(seed + attempt);
    std::vector<std::uint8_t> occ(n, 0);
    std::size_t filled = 0;
    while (filled < target) {
      const int bh = static_cast<int>(rng.uniform_int(min_h, max_h));
      const int bw = static_cast<int>(rng.uniform_int(min_w, max_w));
      const int top = static_cast<int>(rng.uniform_int(0, height - bh));
      const int left = static_cast<int>(rng.uniform_int(0, width - bw));
      for (int i = top; i < top + bh; ++i)
        for (int j = left; j < left + bw; ++j) {
          auto& cell = occ[static_cast<std::size_t>(i) * width + j];
          if (!cell) {
            cell = 1;
            ++filled;
          }
        }
    }
    if (has_open_3x3(occ, width, height))
      return SiteMap::from_occupancy(width, height, cell_size, std::move(occ));
  }
  throw Error("unsatisfiable density/size combination after 1000 attempts");
}

SiteMap mirror(const SiteMap& map, MirrorAxis axis) {
  const int w = map.width();
  const int h = map.height();
  auto flip = [&](std::span<const std::uint8_t> src) {
    std::vector<std::uint8_t> out(src.size());
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const int si = axis == MirrorAxis::kVertical ? h - 1 - i : i;
        const int sj = axis == MirrorAxis::kHorizontal ? w - 1 - j : j;
        out[i * w + j] = src[si * w + sj];
      }
    return out;
  };
  bool rooftop = false;
  for (int k = 0; k < map.cells(); ++k)
    rooftop = rooftop || (map.occupancy()[k] && map.deployable_mask()[k]);
  return SiteMap(w, h, map.cell_size(), flip(map.occupancy()), flip(map.deployable_mask()),
                 flip(map.receiver_mask()), rooftop);
}

}  // namespace bsplace
