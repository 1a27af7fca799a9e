#include "roomtopo/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace roomtopo {

using nlohmann::json;

namespace {

void check_finite(const Vec3& p, std::size_t index) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
        throw ParseError("point " + std::to_string(index) + " has a non-finite coordinate");
    }
}

struct PlyProperty {
    std::string name;
    int byte_size = 0;     // 0 for list properties
    bool is_float32 = false;
    bool is_float64 = false;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

int scalar_size(const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
        type == "float" || type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    return -1;
}

// Reads one header line ending in '\n'; returns false at end of input.
bool next_line(std::string_view bytes, std::size_t& pos, std::string& line) {
    if (pos >= bytes.size()) return false;
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) {
        line.assign(bytes.substr(pos));
        pos = bytes.size();
    } else {
        line.assign(bytes.substr(pos, end - pos));
        pos = end + 1;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

double parse_ascii_number(const std::string& tok, std::size_t offset) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("invalid number '" + tok + "' near byte offset " + std::to_string(offset));
    }
    return v;
}

}  // namespace

PointCloud parse_ply(std::string_view bytes) {
    std::size_t pos = 0;
    std::string line;

    if (!next_line(bytes, pos, line) || line != "ply") {
        throw ParseError("not a PLY file: missing 'ply' magic at byte offset 0");
    }

    bool is_binary = false;
    bool format_seen = false;
    std::vector<PlyElement> elements;

    while (true) {
        const std::size_t line_offset = pos;
        if (!next_line(bytes, pos, line)) {
            throw ParseError("unterminated PLY header at byte offset " + std::to_string(line_offset));
        }
        auto toks = split_ws(line);
        if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
        if (toks[0] == "format") {
            if (toks.size() < 2) {
                throw ParseError("malformed format line at byte offset " + std::to_string(line_offset));
            }
            if (toks[1] == "ascii") {
                is_binary = false;
            } else if (toks[1] == "binary_little_endian") {
                is_binary = true;
            } else if (toks[1] == "binary_big_endian") {
                throw ParseError("unsupported big-endian PLY at byte offset " + std::to_string(line_offset));
            } else {
                throw ParseError("unknown PLY format '" + toks[1] + "' at byte offset " +
                                 std::to_string(line_offset));
            }
            format_seen = true;
        } else if (toks[0] == "element") {
            if (toks.size() != 3) {
                throw ParseError("malformed element line at byte offset " + std::to_string(line_offset));
            }
            PlyElement el;
            el.name = toks[1];
            try {
                el.count = std::stoull(toks[2]);
            } catch (const std::exception&) {
                throw ParseError("bad element count at byte offset " + std::to_string(line_offset));
            }
            elements.push_back(std::move(el));
        } else if (toks[0] == "property") {
            if (elements.empty()) {
                throw ParseError("property before any element at byte offset " +
                                 std::to_string(line_offset));
            }
            PlyProperty prop;
            if (toks.size() == 5 && toks[1] == "list") {
                prop.is_list = true;
                prop.name = toks[4];
            } else if (toks.size() == 3) {
                int sz = scalar_size(toks[1]);
                if (sz < 0) {
                    throw ParseError("unknown property type '" + toks[1] + "' at byte offset " +
                                     std::to_string(line_offset));
                }
                prop.byte_size = sz;
                prop.is_float32 = (toks[1] == "float" || toks[1] == "float32");
                prop.is_float64 = (toks[1] == "double" || toks[1] == "float64");
                prop.name = toks[2];
            } else {
                throw ParseError("malformed property line at byte offset " + std::to_string(line_offset));
            }
            elements.back().properties.push_back(std::move(prop));
        } else if (toks[0] == "end_header") {
            break;
        } else {
            throw ParseError("unrecognized header keyword '" + toks[0] + "' at byte offset " +
                             std::to_string(line_offset));
        }
    }
    if (!format_seen) {
        throw ParseError("PLY header missing format line");
    }

    auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                  [](const PlyElement& e) { return e.name == "vertex"; });
    if (vertex_it == elements.end()) {
        throw ParseError("PLY header declares no vertex element");
    }

    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < vertex_it->properties.size(); ++i) {
        const auto& p = vertex_it->properties[i];
        if (p.is_list) {
            throw ParseError("list property '" + p.name + "' inside vertex element is unsupported");
        }
        if (p.name == "x") ix = static_cast<int>(i);
        if (p.name == "y") iy = static_cast<int>(i);
        if (p.name == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) {
        throw ParseError("vertex element lacks x/y/z properties");
    }
    for (int idx : {ix, iy, iz}) {
        const auto& p = vertex_it->properties[idx];
        if (!p.is_float32 && !p.is_float64) {
            throw ParseError("vertex coordinate property '" + p.name + "' must be float32 or float64");
        }
    }

    PointCloud cloud;
    cloud.points.reserve(vertex_it->count);

    if (!is_binary) {
        for (auto el = elements.begin(); el != elements.end(); ++el) {
            for (std::size_t row = 0; row < el->count; ++row) {
                const std::size_t row_offset = pos;
                if (!next_line(bytes, pos, line)) {
                    throw ParseError("truncated PLY body: element '" + el->name + "' row " +
                                     std::to_string(row) + " missing at byte offset " +
                                     std::to_string(row_offset));
                }
                if (el != vertex_it) continue;
                auto toks = split_ws(line);
                if (toks.size() < el->properties.size()) {
                    throw ParseError("vertex row " + std::to_string(row) + " has " +
                                     std::to_string(toks.size()) + " values, expected " +
                                     std::to_string(el->properties.size()) + " at byte offset " +
                                     std::to_string(row_offset));
                }
                Vec3 p{parse_ascii_number(toks[ix], row_offset),
                       parse_ascii_number(toks[iy], row_offset),
                       parse_ascii_number(toks[iz], row_offset)};
                check_finite(p, row);
                cloud.points.push_back(p);
            }
            if (el == vertex_it) break;  // later elements are irrelevant
        }
    } else {
        for (auto el = elements.begin(); el != elements.end(); ++el) {
            if (el != vertex_it) {
                // Skip a preceding element only when its rows have a fixed size.
                std::size_t row_size = 0;
                for (const auto& p : el->properties) {
                    if (p.is_list) {
                        throw ParseError("cannot skip binary element '" + el->name +
                                         "' with list properties before vertex data");
                    }
                    row_size += static_cast<std::size_t>(p.byte_size);
                }
                std::size_t need = row_size * el->count;
                if (bytes.size() - pos < need) {
                    throw ParseError("truncated PLY body in element '" + el->name +
                                     "' at byte offset " + std::to_string(pos));
                }
                pos += need;
                continue;
            }
            std::size_t row_size = 0;
            std::size_t off_x = 0, off_y = 0, off_z = 0;
            for (std::size_t i = 0; i < el->properties.size(); ++i) {
                if (static_cast<int>(i) == ix) off_x = row_size;
                if (static_cast<int>(i) == iy) off_y = row_size;
                if (static_cast<int>(i) == iz) off_z = row_size;
                row_size += static_cast<std::size_t>(el->properties[i].byte_size);
            }
            auto read_coord = [&](std::size_t base, std::size_t off, const PlyProperty& prop) {
                if (prop.is_float64) {
                    double v;
                    std::memcpy(&v, bytes.data() + base + off, 8);
                    return v;
                }
                float v;
                std::memcpy(&v, bytes.data() + base + off, 4);
                return static_cast<double>(v);
            };
            for (std::size_t row = 0; row < el->count; ++row) {
                std::size_t base = pos + row * row_size;
                if (base + row_size > bytes.size()) {
                    throw ParseError("truncated PLY body: vertex " + std::to_string(row) +
                                     " ends past input (byte offset " + std::to_string(bytes.size()) +
                                     ")");
                }
                Vec3 p{read_coord(base, off_x, el->properties[ix]),
                       read_coord(base, off_y, el->properties[iy]),
                       read_coord(base, off_z, el->properties[iz])};
                check_finite(p, row);
                cloud.points.push_back(p);
            }
            break;
        }
    }

    return cloud;
}

std::string write_ply(const PointCloud& cloud, PlyFormat format, PlyScalar scalar) {
    std::ostringstream out;
    const char* type = (scalar == PlyScalar::float64) ? "double" : "float";
    out << "ply\n"
        << "format " << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
        << "element vertex " << cloud.points.size() << "\n"
        << "property " << type << " x\n"
        << "property " << type << " y\n"
        << "property " << type << " z\n"
        << "end_header\n";

    if (format == PlyFormat::ascii) {
        char buf[80];
        for (const auto& p : cloud.points) {
            if (scalar == PlyScalar::float64) {
                std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x, p.y, p.z);
            } else {
                std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", static_cast<float>(p.x),
                              static_cast<float>(p.y), static_cast<float>(p.z));
            }
            out << buf;
        }
    } else {
        for (const auto& p : cloud.points) {
            if (scalar == PlyScalar::float64) {
                double v[3] = {p.x, p.y, p.z};
                out.write(reinterpret_cast<const char*>(v), sizeof v);
            } else {
                float v[3] = {static_cast<float>(p.x), static_cast<float>(p.y),
                              static_cast<float>(p.z)};
                out.write(reinterpret_cast<const char*>(v), sizeof v);
            }
        }
    }
    return out.str();
}

PointCloud parse_xyz(std::string_view text) {
    PointCloud cloud;
    std::size_t pos = 0;
    std::string line;
    std::size_t line_no = 0;
    while (next_line(text, pos, line)) {
        ++line_no;
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto toks = split_ws(line);
        if (toks.size() != 3) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 3 values, got " +
                             std::to_string(toks.size()));
        }
        Vec3 p;
        double* dst[3] = {&p.x, &p.y, &p.z};
        for (int i = 0; i < 3; ++i) {
            const auto& tok = toks[i];
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), *dst[i]);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) {
                throw ParseError("line " + std::to_string(line_no) + ": invalid number '" + tok + "'");
            }
        }
        check_finite(p, cloud.points.size());
        cloud.points.push_back(p);
    }
    return cloud;
}

std::string write_xyz(const PointCloud& cloud) {
    std::ostringstream out;
    char buf[80];
    for (const auto& p : cloud.points) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x, p.y, p.z);
        out << buf;
    }
    return out.str();
}

namespace {

// nlohmann keeps the last duplicate silently; reject duplicates instead.
json parse_json_strict(std::string_view text, const char* what) {
    std::vector<std::set<std::string>> key_stack;
    std::string dup;
    json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
        switch (event) {
            case json::parse_event_t::object_start:
                key_stack.emplace_back();
                break;
            case json::parse_event_t::object_end:
                key_stack.pop_back();
                break;
            case json::parse_event_t::key: {
                auto key = parsed.get<std::string>();
                if (!key_stack.back().insert(key).second && dup.empty()) dup = key;
                break;
            }
            default:
                break;
        }
        return true;
    };
    json doc;
    try {
        doc = json::parse(text, cb);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
    if (!dup.empty()) {
        throw SchemaError(std::string(what) + ": duplicate key '" + dup + "'");
    }
    return doc;
}

Eigen::VectorXd read_embedding(const json& arr, int expected_dim, const std::string& ctx) {
    if (!arr.is_array()) throw SchemaError(ctx + ": embedding must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw SchemaError(ctx + ": embedding element is not a number");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    if (expected_dim > 0 && v.size() != expected_dim) {
        throw SchemaError(ctx + ": embedding has dimension " + std::to_string(v.size()) +
                          ", expected " + std::to_string(expected_dim));
    }
    if (!v.allFinite()) throw SchemaError(ctx + ": embedding has non-finite values");
    double n = v.norm();
    if (n < 1e-6) throw SchemaError(ctx + ": embedding norm " + std::to_string(n) + " is degenerate");
    if (n < 0.5 || n > 2.0) {
        throw SchemaError(ctx + ": embedding norm " + std::to_string(n) +
                          " outside the accepted [0.5, 2] drift range");
    }
    return v / n;
}

json embedding_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

ObjectMap parse_object_map(std::string_view json_text) {
    json doc = parse_json_strict(json_text, "object map");
    if (!doc.is_object() || !doc.contains("embedding_dim") || !doc.contains("objects")) {
        throw SchemaError("object map: expected {embedding_dim, objects}");
    }
    ObjectMap map;
    map.embedding_dim = doc["embedding_dim"].get<int>();
    if (map.embedding_dim <= 0) throw SchemaError("object map: embedding_dim must be positive");

    std::set<int> seen_ids;
    for (const auto& obj : doc["objects"]) {
        ObjectInstance inst;
        if (!obj.contains("id") || !obj.contains("embedding") || !obj.contains("points")) {
            throw SchemaError("object map: object entries need {id, embedding, points}");
        }
        inst.id = obj["id"].get<int>();
        if (!seen_ids.insert(inst.id).second) {
            throw SchemaError("object map: duplicate object id " + std::to_string(inst.id));
        }
        std::string ctx = "object " + std::to_string(inst.id);
        inst.embedding = read_embedding(obj["embedding"], map.embedding_dim, ctx);
        for (const auto& pt : obj["points"]) {
            if (!pt.is_array() || pt.size() != 3) {
                throw SchemaError(ctx + ": points must be [x,y,z] triples");
            }
            Vec3 p{pt[0].get<double>(), pt[1].get<double>(), pt[2].get<double>()};
            check_finite(p, inst.points.size());
            inst.points.points.push_back(p);
        }
        if (inst.points.empty()) throw SchemaError(ctx + ": empty point cloud");
        map.objects.push_back(std::move(inst));
    }
    return map;
}

std::string write_object_map(const ObjectMap& map) {
    json doc;
    doc["embedding_dim"] = map.embedding_dim;
    doc["objects"] = json::array();
    for (const auto& obj : map.objects) {
        json o;
        o["id"] = obj.id;
        o["embedding"] = embedding_to_json(obj.embedding);
        json pts = json::array();
        for (const auto& p : obj.points.points) pts.push_back({p.x, p.y, p.z});
        o["points"] = std::move(pts);
        doc["objects"].push_back(std::move(o));
    }
    return doc.dump(2);
}

EmbeddingTable parse_embedding_table(std::string_view json_text) {
    json doc = parse_json_strict(json_text, "embedding table");
    if (!doc.is_object() || !doc.contains("embedding_dim") || !doc.contains("entries")) {
        throw SchemaError("embedding table: expected {embedding_dim, entries}");
    }
    EmbeddingTable table;
    table.embedding_dim = doc["embedding_dim"].get<int>();
    if (table.embedding_dim <= 0) throw SchemaError("embedding table: embedding_dim must be positive");
    if (!doc["entries"].is_object()) throw SchemaError("embedding table: entries must be an object");
    for (const auto& [phrase, arr] : doc["entries"].items()) {
        table.entries[phrase] = read_embedding(arr, table.embedding_dim, "phrase '" + phrase + "'");
    }
    if (table.entries.empty()) {
        throw SchemaError("embedding table: no entries (labeling needs at least one candidate)");
    }
    return table;
}

std::string write_embedding_table(const EmbeddingTable& table) {
    json doc;
    doc["embedding_dim"] = table.embedding_dim;
    doc["entries"] = json::object();
    for (const auto& [phrase, v] : table.entries) doc["entries"][phrase] = embedding_to_json(v);
    return doc.dump(2);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

PointCloud load_point_cloud(const std::string& path) {
    std::string data = read_file(path);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".xyz") return parse_xyz(data);
    return parse_ply(data);
}

void save_point_cloud(const PointCloud& cloud, const std::string& path, PlyFormat format,
                      PlyScalar scalar) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".xyz") {
        write_file(path, write_xyz(cloud));
    } else {
        write_file(path, write_ply(cloud, format, scalar));
    }
}

}  // namespace roomtopo
