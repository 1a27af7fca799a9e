#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "roomtopo/errors.hpp"

namespace roomtopo {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3&) const = default;
};

/// Unordered 3D points in meters. Point order carries no semantics downstream;
/// it is preserved in storage only so that parse/serialize round-trips are exact.
struct PointCloud {
    std::vector<Vec3> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// One mapped object: its point cloud plus a unit-norm feature vector.
struct ObjectInstance {
    int id = 0;
    PointCloud points;
    Eigen::VectorXd embedding;
};

struct ObjectMap {
    int embedding_dim = 0;
    std::vector<ObjectInstance> objects;
};

/// Phrase -> unit vector lookup standing in for a text encoder. std::map keeps
/// phrases in lexicographic order, which downstream tie-breaking relies on.
struct EmbeddingTable {
    int embedding_dim = 0;
    std::map<std::string, Eigen::VectorXd> entries;

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
};

enum class PlyFormat { ascii, binary_little_endian };
enum class PlyScalar { float32, float64 };

/// Parse an ASCII or binary-little-endian PLY document. Only the vertex
/// element's x/y/z properties are read; other scalar properties are skipped.
/// Throws ParseError with a byte offset on malformed or truncated input.
PointCloud parse_ply(std::string_view bytes);

/// Serialize a cloud as PLY. float64 + binary (or ascii) round-trips exactly.
std::string write_ply(const PointCloud& cloud,
                      PlyFormat format = PlyFormat::binary_little_endian,
                      PlyScalar scalar = PlyScalar::float64);

/// Parse whitespace-separated "x y z" lines. Blank lines and lines whose first
/// non-space character is '#' are skipped. Throws ParseError with a line number.
PointCloud parse_xyz(std::string_view text);

std::string write_xyz(const PointCloud& cloud);

/// Parse the object-map JSON document. Embeddings with norm in [0.5, 2] are
/// re-normalized; vectors outside that range are rejected.
ObjectMap parse_object_map(std::string_view json_text);
std::string write_object_map(const ObjectMap& map);

EmbeddingTable parse_embedding_table(std::string_view json_text);
std::string write_embedding_table(const EmbeddingTable& table);

// File wrappers around the string-based parsers.
PointCloud load_point_cloud(const std::string& path);  // dispatches on .ply/.xyz
void save_point_cloud(const PointCloud& cloud, const std::string& path,
                      PlyFormat format = PlyFormat::binary_little_endian,
                      PlyScalar scalar = PlyScalar::float64);
ObjectMap load_object_map(const std::string& path);
EmbeddingTable load_embedding_table(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace roomtopo
