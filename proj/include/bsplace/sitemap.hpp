#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bsplace {

// Grid cell (row i, column j).
struct Coord {
  int i = 0;
  int j = 0;

  friend auto operator<=>(const Coord&, const Coord&) = default;
};

std::string to_string(const Coord& c);

enum class MirrorAxis { kHorizontal, kVertical };

// Raster site description: building occupancy plus the deployable set B and
// the receiver region R. Immutable once built.
class SiteMap {
 public:
  // Validates the invariants (R avoids buildings, B and R non-empty, and B
  // avoids buildings unless `deployable_override` is set) and computes map_id.
  SiteMap(int width, int height, double cell_size, std::vector<std::uint8_t> occupancy,
          std::vector<std::uint8_t> deployable, std::vector<std::uint8_t> receiver,
          bool deployable_override = false);

  // Masks default to the open cells.
  static SiteMap from_occupancy(int width, int height, double cell_size,
                                std::vector<std::uint8_t> occupancy);

  int width() const { return width_; }
  int height() const { return height_; }
  int cells() const { return width_ * height_; }
  double cell_size() const { return cell_size_; }
  std::uint64_t map_id() const { return map_id_; }

  bool in_bounds(Coord c) const {
    return c.i >= 0 && c.i < height_ && c.j >= 0 && c.j < width_;
  }
  int flat(Coord c) const { return c.i * width_ + c.j; }
  Coord coord(int flat_index) const { return {flat_index / width_, flat_index % width_}; }

  bool occupied(Coord c) const { return occupancy_[flat(c)] != 0; }
  bool deployable(Coord c) const { return deployable_[flat(c)] != 0; }
  bool receiver(Coord c) const { return receiver_[flat(c)] != 0; }

  std::span<const std::uint8_t> occupancy() const { return occupancy_; }
  std::span<const std::uint8_t> deployable_mask() const { return deployable_; }
  std::span<const std::uint8_t> receiver_mask() const { return receiver_; }

  // Cells of B / R in row-major order.
  const std::vector<Coord>& deployable_cells() const { return deployable_cells_; }
  const std::vector<int>& receiver_indices() const { return receiver_indices_; }
  int deployable_count() const { return static_cast<int>(deployable_cells_.size()); }
  int receiver_count() const { return static_cast<int>(receiver_indices_.size()); }

  double occupied_fraction() const;

 private:
  int width_;
  int height_;
  double cell_size_;
  std::vector<std::uint8_t> occupancy_;
  std::vector<std::uint8_t> deployable_;
  std::vector<std::uint8_t> receiver_;
  std::vector<Coord> deployable_cells_;
  std::vector<int> receiver_indices_;
  std::uint64_t map_id_ = 0;
};

// Raster PGM (pixel >= 128 is a building) plus optional PGM masks (nonzero is
// a member). Loading a deployable mask allows rooftop cells.
SiteMap load_sitemap(std::span<const std::uint8_t> raster, double cell_size,
                     std::optional<std::span<const std::uint8_t>> deployable_mask = std::nullopt,
                     std::optional<std::span<const std::uint8_t>> receiver_mask = std::nullopt);

struct SavedSiteMap {
  std::vector<std::uint8_t> raster;
  std::vector<std::uint8_t> deployable_mask;
  std::vector<std::uint8_t> receiver_mask;
};

// Canonical PGMs using pixel values 0 and 255 only.
SavedSiteMap save_sitemap(const SiteMap& map);

struct SizeRange {
  int min = 3;
  int max = 8;
};

// Random axis-aligned rectangles (xoshiro256** seeded by `seed`, then
// seed+1, ... per retry) until the occupied fraction reaches
// `building_density`. A retry is taken when no fully open 3x3 block remains.
SiteMap generate_synthetic(std::uint64_t seed, int width, int height, double cell_size,
                           double building_density, SizeRange building_size = {});

SiteMap mirror(const SiteMap& map, MirrorAxis axis);

}  // namespace bsplace
