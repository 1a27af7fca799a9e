#pragma once

#include <stdexcept>
#include <string>

namespace roomtopo {

/// Malformed input bytes/text (PLY, XYZ, JSON syntax). Carries a position hint
/// (byte offset or line number) inside the message.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally valid document that violates a schema contract
/// (duplicate ids, dimension mismatch, unknown category, ...).
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace roomtopo
