#pragma once

// Manhattan-grid geometry: blocks of buildings separated by street corridors,
// a base station near the center, square-tile tessellation of street area.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ngo/geometry.hpp"

namespace ngo {

enum class Orientation { kHorizontal, kVertical };

struct GridSpec {
  int blocks_x{6};
  int blocks_y{6};
  double building_width{90.0};
  double street_width{10.0};
  double building_height{20.0};
  int n_floors{4};
  /// Negative coordinates mean "scenario center".
  Vec2 bs_position{-1.0, -1.0};
  double bs_height{25.0};
  double tile_side{1.0};
  double device_height{1.5};

  double pitch() const { return building_width + street_width; }
  double side_x() const { return blocks_x * pitch() + street_width; }
  double side_y() const { return blocks_y * pitch() + street_width; }
  double floor_height() const { return building_height / n_floors; }
};

struct StreetSegment {
  int id{0};
  Vec2 a;
  Vec2 b;
  double width{0.0};
  Orientation orientation{Orientation::kHorizontal};

  double length() const { return distance(a, b); }
};

struct Tile {
  int index{0};
  Vec2 center;
  int street_id{0};
  // Lattice coordinates of the tile in the global tessellation.
  int ix{0};
  int iy{0};
};

struct CoverageRegion {
  Vec2 center;
  double radius{0.0};
  double tile_side{1.0};
  std::vector<Tile> tiles;

  std::size_t tile_count() const { return tiles.size(); }
  bool empty() const { return tiles.empty(); }
};

struct StreetCoverage {
  int street_id{0};
  double covered_length{0.0};
};

class Grid {
 public:
  explicit Grid(const GridSpec& spec) : spec_(spec) {
    if (spec.blocks_x < 1 || spec.blocks_y < 1)
      throw std::invalid_argument("grid: block counts must be >= 1");
    if (!(spec.building_width > 0.0) || !(spec.street_width > 0.0) ||
        !(spec.building_height > 0.0) || !(spec.bs_height > 0.0) ||
        !(spec.tile_side > 0.0) || spec.n_floors < 1 || spec.device_height < 0.0)
      throw std::invalid_argument("grid: dimensions must be positive");
    if (spec_.bs_position.x < 0.0 && spec_.bs_position.y < 0.0)
      spec_.bs_position = {spec_.side_x() / 2.0, spec_.side_y() / 2.0};
    if (!bounds().contains(spec_.bs_position))
      throw std::invalid_argument("grid: base station outside scenario");

    const double p = spec_.pitch();
    const double sw = spec_.street_width;
    for (int j = 0; j < spec_.blocks_y; ++j)
      for (int i = 0; i < spec_.blocks_x; ++i)
        buildings_.push_back({sw + i * p, sw + j * p, (i + 1) * p, (j + 1) * p});

    int id = 1;
    for (int j = 0; j <= spec_.blocks_y; ++j)
      for (int i = 0; i < spec_.blocks_x; ++i)
        streets_.push_back({id++, intersection(i, j), intersection(i + 1, j), sw,
                            Orientation::kHorizontal});
    for (int i = 0; i <= spec_.blocks_x; ++i)
      for (int j = 0; j < spec_.blocks_y; ++j)
        streets_.push_back({id++, intersection(i, j), intersection(i, j + 1), sw,
                            Orientation::kVertical});
  }

  const GridSpec& spec() const { return spec_; }
  const std::vector<StreetSegment>& streets() const { return streets_; }
  const std::vector<Rect>& buildings() const { return buildings_; }
  const StreetSegment& street(int id) const { return streets_.at(static_cast<std::size_t>(id - 1)); }

  Rect bounds() const { return {0.0, 0.0, spec_.side_x(), spec_.side_y()}; }
  Vec2 bs_position() const { return spec_.bs_position; }
  Vec3 bs() const { return lift(spec_.bs_position, spec_.bs_height); }

  int intersections_x() const { return spec_.blocks_x + 1; }
  int intersections_y() const { return spec_.blocks_y + 1; }
  int intersection_count() const { return intersections_x() * intersections_y(); }
  Vec2 intersection(int i, int j) const {
    const double half = spec_.street_width / 2.0;
    return {half + i * spec_.pitch(), half + j * spec_.pitch()};
  }

  double total_axis_length() const {
    double total = 0.0;
    for (const auto& s : streets_) total += s.length();
    return total;
  }

  /// Horizontal segment id between intersections (i,j) and (i+1,j).
  int horizontal_id(int i, int j) const { return 1 + j * spec_.blocks_x + i; }
  /// Vertical segment id between intersections (i,j) and (i,j+1).
  int vertical_id(int i, int j) const {
    return 1 + (spec_.blocks_y + 1) * spec_.blocks_x + i * spec_.blocks_y + j;
  }

  bool inside(Vec2 p) const { return bounds().contains(p); }

  bool on_street(Vec2 p) const {
    if (!inside(p)) return false;
    const int bi = building_index(p);
    return bi < 0;
  }

  /// Index of the building whose interior contains p, or -1.
  int building_index(Vec2 p) const {
    const double pch = spec_.pitch();
    const double sw = spec_.street_width;
    const int i = static_cast<int>(std::floor(p.x / pch));
    const int j = static_cast<int>(std::floor(p.y / pch));
    if (i < 0 || j < 0 || i >= spec_.blocks_x || j >= spec_.blocks_y) return -1;
    const double lx = p.x - i * pch;
    const double ly = p.y - j * pch;
    if (lx > sw && ly > sw) return j * spec_.blocks_x + i;
    return -1;
  }

  /// Street segment owning a street point. Intersection squares belong to the
  /// horizontal corridor. Returns 0 for points not on a street.
  int street_at(Vec2 p) const {
    if (!on_street(p)) return 0;
    const double pch = spec_.pitch();
    const double half = spec_.street_width / 2.0;
    const int row = static_cast<int>(std::lround((p.y - half) / pch));
    const int col = static_cast<int>(std::lround((p.x - half) / pch));
    const bool in_row = row >= 0 && row <= spec_.blocks_y &&
                        std::abs(p.y - (half + row * pch)) <= half + 1e-9;
    if (in_row) {
      const int i = std::clamp(static_cast<int>(std::floor((p.x - half) / pch)), 0,
                               spec_.blocks_x - 1);
      return horizontal_id(i, row);
    }
    const int j = std::clamp(static_cast<int>(std::floor((p.y - half) / pch)), 0,
                             spec_.blocks_y - 1);
    return vertical_id(std::clamp(col, 0, spec_.blocks_x), j);
  }

  /// True iff the 3D segment a-b crosses no building volume.
  bool los(Vec3 a, Vec3 b) const {
    const double lo_x = std::min(a.x, b.x), hi_x = std::max(a.x, b.x);
    const double lo_y = std::min(a.y, b.y), hi_y = std::max(a.y, b.y);
    const double pch = spec_.pitch();
    const int i0 = std::max(0, static_cast<int>(std::floor(lo_x / pch)));
    const int i1 = std::min(spec_.blocks_x - 1, static_cast<int>(std::floor(hi_x / pch)));
    const int j0 = std::max(0, static_cast<int>(std::floor(lo_y / pch)));
    const int j1 = std::min(spec_.blocks_y - 1, static_cast<int>(std::floor(hi_y / pch)));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        if (segment_hits_box(a, b, buildings_[static_cast<std::size_t>(j * spec_.blocks_x + i)],
                             spec_.building_height))
          return false;
    return true;
  }

  // Lattice helpers for the global tile tessellation.
  int lattice_nx() const { return static_cast<int>(std::ceil(spec_.side_x() / spec_.tile_side - 1e-9)); }
  int lattice_ny() const { return static_cast<int>(std::ceil(spec_.side_y() / spec_.tile_side - 1e-9)); }
  Vec2 lattice_center(int ix, int iy) const {
    return {(ix + 0.5) * spec_.tile_side, (iy + 0.5) * spec_.tile_side};
  }

 private:
  GridSpec spec_;
  std::vector<Rect> buildings_;
  std::vector<StreetSegment> streets_;
};

inline Grid build_grid(const GridSpec& spec) { return Grid(spec); }

inline bool los_between(const Grid& grid, Vec3 a, Vec3 b) { return grid.los(a, b); }

/// Street tiles of side `tile_side` whose centers lie within `radius` of
/// `center`, in row-major order (ascending y, then x).
inline CoverageRegion coverage_region(const Grid& grid, Vec2 center, double radius,
                                      double tile_side) {
  if (!(radius > 0.0) || !(tile_side > 0.0))
    throw std::invalid_argument("coverage_region: radius and tile_side must be positive");
  CoverageRegion region{center, radius, tile_side, {}};
  const Rect b = grid.bounds();
  const int nx = static_cast<int>(std::ceil(b.x1 / tile_side - 1e-9));
  const int ny = static_cast<int>(std::ceil(b.y1 / tile_side - 1e-9));
  const int ix0 = std::max(0, static_cast<int>(std::floor((center.x - radius) / tile_side)));
  const int ix1 = std::min(nx - 1, static_cast<int>(std::floor((center.x + radius) / tile_side)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((center.y - radius) / tile_side)));
  const int iy1 = std::min(ny - 1, static_cast<int>(std::floor((center.y + radius) / tile_side)));
  const double r2 = radius * radius;
  int index = 1;
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 c{(ix + 0.5) * tile_side, (iy + 0.5) * tile_side};
      const double dx = c.x - center.x, dy = c.y - center.y;
      if (dx * dx + dy * dy > r2) continue;
      if (!grid.on_street(c)) continue;
      region.tiles.push_back({index++, c, grid.street_at(c), ix, iy});
    }
  }
  return region;
}

inline CoverageRegion coverage_region(const Grid& grid, Vec2 center, double radius) {
  return coverage_region(grid, center, radius, grid.spec().tile_side);
}

/// Streets whose median axis crosses the disk, with the chord length inside it.
inline std::vector<StreetCoverage> streets_in_disk(const Grid& grid, Vec2 center, double radius) {
  std::vector<StreetCoverage> out;
  for (const auto& s : grid.streets()) {
    const double l = chord_length(s.a, s.b, center, radius);
    if (l > 1e-9) out.push_back({s.id, l});
  }
  return out;
}

inline std::vector<StreetCoverage> streets_in_region(const Grid& grid, const CoverageRegion& region) {
  return streets_in_disk(grid, region.center, region.radius);
}

inline nlohmann::ordered_json to_json(const Grid& grid) {
  const auto& s = grid.spec();
  nlohmann::ordered_json j;
  j["spec"] = {{"blocks_x", s.blocks_x},           {"blocks_y", s.blocks_y},
               {"building_width", s.building_width}, {"street_width", s.street_width},
               {"building_height", s.building_height}, {"n_floors", s.n_floors},
               {"bs_x", s.bs_position.x},           {"bs_y", s.bs_position.y},
               {"bs_height", s.bs_height},          {"tile_side", s.tile_side},
               {"side_x", s.side_x()},              {"side_y", s.side_y()}};
  auto streets = nlohmann::ordered_json::array();
  for (const auto& st : grid.streets())
    streets.push_back({{"id", st.id},
                       {"axis", {st.a.x, st.a.y, st.b.x, st.b.y}},
                       {"width", st.width},
                       {"orientation", st.orientation == Orientation::kHorizontal ? "h" : "v"}});
  j["streets"] = std::move(streets);
  auto buildings = nlohmann::ordered_json::array();
  for (const auto& b : grid.buildings()) buildings.push_back({b.x0, b.y0, b.x1, b.y1});
  j["buildings"] = std::move(buildings);
  return j;
}

}  // namespace ngo
