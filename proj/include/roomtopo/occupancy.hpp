#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roomtopo/geometry.hpp"

namespace roomtopo {

/// World <-> grid bookkeeping for a top-down raster. Cell (i, j) covers the
/// half-open square [x0 + i*t, x0 + (i+1)*t) x [y0 + j*t, y0 + (j+1)*t);
/// the outermost max edge is inclusive so cells partition the grid exactly.
struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double tile_size = 0.05;
    int width = 1;
    int height = 1;
    double z_floor = 0.0;
    double z_ceiling = 1.0;

    void validate() const;
    std::size_t cell_count() const { return static_cast<std::size_t>(width) * height; }
    double room_height() const { return z_ceiling - z_floor; }

    bool operator==(const GridSpec&) const = default;
};

struct GridIndex {
    int i = 0;  // column (x)
    int j = 0;  // row (y)
    bool operator==(const GridIndex&) const = default;
};

/// Row-major binary raster; index = j * width + i.
struct BinaryGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> cells;

    BinaryGrid() = default;
    BinaryGrid(int w, int h) : width(w), height(h), cells(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int i, int j) const { return cells[static_cast<std::size_t>(j) * width + i] != 0; }
    void set(int i, int j, bool v) { cells[static_cast<std::size_t>(j) * width + i] = v ? 1 : 0; }
    std::size_t count() const;
    bool same_shape(const BinaryGrid& other) const {
        return width == other.width && height == other.height;
    }
    bool operator==(const BinaryGrid&) const = default;
};

/// Row-major per-cell point counts.
struct CountGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> cells;

    CountGrid() = default;
    CountGrid(int w, int h) : width(w), height(h), cells(static_cast<std::size_t>(w) * h, 0) {}

    std::uint32_t at(int i, int j) const { return cells[static_cast<std::size_t>(j) * width + i]; }
    std::uint32_t& ref(int i, int j) { return cells[static_cast<std::size_t>(j) * width + i]; }
    std::uint64_t sum() const;
    bool operator==(const CountGrid&) const = default;
};

struct Betaband {
    double lo = 0.0;
    double hi = 1.0;
};

inline constexpr Betaband kCeilingBand{0.7, 0.9};
inline constexpr Betaband kFloorBand{0.1, 0.3};

/// Density map plus the two occupancy slices on a shared spec.
struct MultiChannelGrid {
    GridSpec spec;
    CountGrid density;
    BinaryGrid o_ceiling;
    BinaryGrid o_floor;

    bool operator==(const MultiChannelGrid&) const = default;
};

/// Robust floor/ceiling heights as z quantiles (linear interpolation between
/// order statistics). Defaults trim 1% scan noise at each end.
std::pair<double, double> estimate_heights(const PointCloud& cloud, double lo_pct = 0.01,
                                           double hi_pct = 0.99);

/// Axis-aligned grid covering the cloud's xy bounding box, expanded by
/// `padding` cells per side. Heights come from estimate_heights defaults.
GridSpec fit_grid(const PointCloud& cloud, double tile_size, int padding = 0);

/// Cell is set iff at least one point with beta.lo*h <= (p_z - z_floor) <= beta.hi*h
/// lands in it (inclusive band). Points outside the grid's xy bounds are ignored.
BinaryGrid slice_occupancy(const PointCloud& cloud, const GridSpec& spec, Betaband beta);

/// Full 3-channel raster: density counts every in-bounds point regardless of z;
/// the slices use the given bands. Output is independent of point order.
MultiChannelGrid rasterize(const PointCloud& cloud, const GridSpec& spec,
                           Betaband ceiling = kCeilingBand, Betaband floor = kFloorBand);

std::optional<GridIndex> world_to_grid(double x, double y, const GridSpec& spec);

/// Center of cell (i, j) in world meters.
std::pair<double, double> grid_to_world(int i, int j, const GridSpec& spec);

/// Ceiling-occupied, floor-free cells; the open-doorway signature.
BinaryGrid doorway_channel(const BinaryGrid& o_ceiling, const BinaryGrid& o_floor);

// Grid document (JSON header + row-major channel payloads).
std::string write_grid(const MultiChannelGrid& grid);
MultiChannelGrid parse_grid(std::string_view json_text);
void save_grid(const MultiChannelGrid& grid, const std::string& path);
MultiChannelGrid load_grid(const std::string& path);

// 8-bit grayscale PNG dumps for inspection (density log-scaled).
void export_density_png(const CountGrid& density, const std::string& path);
void export_binary_png(const BinaryGrid& grid, const std::string& path);

GridSpec grid_spec_from_json_text(std::string_view json_text);

}  // namespace roomtopo
