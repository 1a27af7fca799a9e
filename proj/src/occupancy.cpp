#include "roomtopo/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <stdexcept>

#include "roomtopo/png_io.hpp"

namespace roomtopo {

using nlohmann::json;

void GridSpec::validate() const {
    if (!(tile_size > 0.0)) throw std::invalid_argument("grid: tile_size must be > 0");
    if (width < 1 || height < 1) throw std::invalid_argument("grid: width/height must be >= 1");
    if (!(z_ceiling > z_floor)) throw std::invalid_argument("grid: z_ceiling must exceed z_floor");
}

std::size_t BinaryGrid::count() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

std::uint64_t CountGrid::sum() const {
    return std::accumulate(cells.begin(), cells.end(), std::uint64_t{0});
}

std::pair<double, double> estimate_heights(const PointCloud& cloud, double lo_pct, double hi_pct) {
    if (cloud.empty()) throw std::invalid_argument("estimate_heights: empty cloud");
    if (!(0.0 <= lo_pct && lo_pct < hi_pct && hi_pct <= 1.0)) {
        throw std::invalid_argument("estimate_heights: need 0 <= lo_pct < hi_pct <= 1");
    }
    std::vector<double> zs(cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) zs[k] = cloud.points[k].z;
    std::sort(zs.begin(), zs.end());

    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(zs.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, zs.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return zs[lo] * (1.0 - frac) + zs[hi] * frac;
    };

    double z_floor = quantile(lo_pct);
    double z_ceiling = quantile(hi_pct);
    if (z_ceiling - z_floor < 1e-6) {
        throw std::invalid_argument("estimate_heights: degenerate height span (< 1e-6 m)");
    }
    return {z_floor, z_ceiling};
}

GridSpec fit_grid(const PointCloud& cloud, double tile_size, int padding) {
    if (cloud.empty()) throw std::invalid_argument("fit_grid: empty cloud");
    if (!(tile_size > 0.0)) throw std::invalid_argument("fit_grid: tile_size must be > 0");
    if (padding < 0) throw std::invalid_argument("fit_grid: padding must be >= 0");

    double min_x = cloud.points[0].x, max_x = min_x;
    double min_y = cloud.points[0].y, max_y = min_y;
    for (const auto& p : cloud.points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    auto [z_floor, z_ceiling] = estimate_heights(cloud);

    GridSpec spec;
    spec.tile_size = tile_size;
    spec.width = std::max(1, static_cast<int>(std::ceil((max_x - min_x) / tile_size))) + 2 * padding;
    spec.height = std::max(1, static_cast<int>(std::ceil((max_y - min_y) / tile_size))) + 2 * padding;
    spec.origin_x = min_x - padding * tile_size;
    spec.origin_y = min_y - padding * tile_size;
    spec.z_floor = z_floor;
    spec.z_ceiling = z_ceiling;
    spec.validate();
    return spec;
}

std::optional<GridIndex> world_to_grid(double x, double y, const GridSpec& spec) {
    const double u = (x - spec.origin_x) / spec.tile_size;
    const double v = (y - spec.origin_y) / spec.tile_size;
    if (u < 0.0 || v < 0.0 || u > spec.width || v > spec.height) return std::nullopt;
    // Half-open cells; the grid's outermost max edge folds into the last cell.
    int i = std::min(static_cast<int>(std::floor(u)), spec.width - 1);
    int j = std::min(static_cast<int>(std::floor(v)), spec.height - 1);
    return GridIndex{i, j};
}

std::pair<double, double> grid_to_world(int i, int j, const GridSpec& spec) {
    return {spec.origin_x + (i + 0.5) * spec.tile_size, spec.origin_y + (j + 0.5) * spec.tile_size};
}

BinaryGrid slice_occupancy(const PointCloud& cloud, const GridSpec& spec, Betaband beta) {
    spec.validate();
    if (!(0.0 <= beta.lo && beta.lo < beta.hi && beta.hi <= 1.0)) {
        throw std::invalid_argument("slice_occupancy: need 0 <= beta.lo < beta.hi <= 1");
    }
    const double h = spec.room_height();
    const double z_lo = spec.z_floor + beta.lo * h;
    const double z_hi = spec.z_floor + beta.hi * h;

    BinaryGrid grid(spec.width, spec.height);
    for (const auto& p : cloud.points) {
        if (p.z < z_lo || p.z > z_hi) continue;
        if (auto cell = world_to_grid(p.x, p.y, spec)) grid.set(cell->i, cell->j, true);
    }
    return grid;
}

MultiChannelGrid rasterize(const PointCloud& cloud, const GridSpec& spec, Betaband ceiling,
                           Betaband floor) {
    spec.validate();
    MultiChannelGrid out;
    out.spec = spec;
    out.density = CountGrid(spec.width, spec.height);
    for (const auto& p : cloud.points) {
        if (auto cell = world_to_grid(p.x, p.y, spec)) ++out.density.ref(cell->i, cell->j);
    }
    out.o_ceiling = slice_occupancy(cloud, spec, ceiling);
    out.o_floor = slice_occupancy(cloud, spec, floor);
    return out;
}

BinaryGrid doorway_channel(const BinaryGrid& o_ceiling, const BinaryGrid& o_floor) {
    if (!o_ceiling.same_shape(o_floor)) {
        throw std::invalid_argument("doorway_channel: grid dimension mismatch");
    }
    BinaryGrid out(o_ceiling.width, o_ceiling.height);
    for (std::size_t k = 0; k < out.cells.size(); ++k) {
        out.cells[k] = (o_ceiling.cells[k] != 0 && o_floor.cells[k] == 0) ? 1 : 0;
    }
    return out;
}

namespace {

json spec_to_json(const GridSpec& spec) {
    return json{{"origin", {spec.origin_x, spec.origin_y}}, {"tile_size", spec.tile_size},
                {"width", spec.width},                      {"height", spec.height},
                {"z_floor", spec.z_floor},                  {"z_ceiling", spec.z_ceiling}};
}

GridSpec spec_from_json(const json& j) {
    GridSpec spec;
    try {
        spec.origin_x = j.at("origin").at(0).get<double>();
        spec.origin_y = j.at("origin").at(1).get<double>();
        spec.tile_size = j.at("tile_size").get<double>();
        spec.width = j.at("width").get<int>();
        spec.height = j.at("height").get<int>();
        spec.z_floor = j.at("z_floor").get<double>();
        spec.z_ceiling = j.at("z_ceiling").get<double>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("grid spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

}  // namespace

GridSpec grid_spec_from_json_text(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("grid spec: ") + e.what());
    }
    if (doc.contains("spec")) return spec_from_json(doc["spec"]);
    if (doc.contains("grid")) return spec_from_json(doc["grid"]);
    return spec_from_json(doc);
}

std::string write_grid(const MultiChannelGrid& grid) {
    json doc;
    doc["spec"] = spec_to_json(grid.spec);
    doc["channels"]["density"] = grid.density.cells;
    doc["channels"]["o_ceiling"] = grid.o_ceiling.cells;
    doc["channels"]["o_floor"] = grid.o_floor.cells;
    return doc.dump();
}

MultiChannelGrid parse_grid(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("grid document: ") + e.what());
    }
    if (!doc.contains("spec") || !doc.contains("channels")) {
        throw SchemaError("grid document: expected {spec, channels}");
    }
    MultiChannelGrid grid;
    grid.spec = spec_from_json(doc["spec"]);
    const auto& ch = doc["channels"];
    const std::size_t n = grid.spec.cell_count();

    auto load_binary = [&](const char* name) {
        if (!ch.contains(name)) throw SchemaError(std::string("grid document: missing channel ") + name);
        BinaryGrid g(grid.spec.width, grid.spec.height);
        const auto& arr = ch[name];
        if (arr.size() != n) throw SchemaError(std::string("grid document: channel ") + name + " size mismatch");
        for (std::size_t k = 0; k < n; ++k) {
            int v = arr[k].get<int>();
            if (v != 0 && v != 1) throw SchemaError(std::string("grid document: channel ") + name + " must be 0/1");
            g.cells[k] = static_cast<std::uint8_t>(v);
        }
        return g;
    };

    if (!ch.contains("density")) throw SchemaError("grid document: missing channel density");
    grid.density = CountGrid(grid.spec.width, grid.spec.height);
    if (ch["density"].size() != n) throw SchemaError("grid document: channel density size mismatch");
    for (std::size_t k = 0; k < n; ++k) {
        auto v = ch["density"][k].get<std::int64_t>();
        if (v < 0) throw SchemaError("grid document: negative density count");
        grid.density.cells[k] = static_cast<std::uint32_t>(v);
    }
    grid.o_ceiling = load_binary("o_ceiling");
    grid.o_floor = load_binary("o_floor");
    return grid;
}

void save_grid(const MultiChannelGrid& grid, const std::string& path) {
    write_file(path, write_grid(grid));
}

MultiChannelGrid load_grid(const std::string& path) { return parse_grid(read_file(path)); }

void export_density_png(const CountGrid& density, const std::string& path) {
    std::vector<std::uint8_t> px(density.cells.size());
    const std::uint32_t max_count = density.cells.empty()
                                        ? 0
                                        : *std::max_element(density.cells.begin(), density.cells.end());
    const double scale = max_count > 0 ? 255.0 / std::log1p(static_cast<double>(max_count)) : 0.0;
    for (std::size_t k = 0; k < density.cells.size(); ++k) {
        px[k] = static_cast<std::uint8_t>(
            std::lround(std::log1p(static_cast<double>(density.cells[k])) * scale));
    }
    write_png_gray(path, density.width, density.height, px);
}

void export_binary_png(const BinaryGrid& grid, const std::string& path) {
    std::vector<std::uint8_t> px(grid.cells.size());
    for (std::size_t k = 0; k < grid.cells.size(); ++k) px[k] = grid.cells[k] ? 255 : 0;
    write_png_gray(path, grid.width, grid.height, px);
}

}  // namespace roomtopo
