#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace roomtopo {

/// Minimal PNG writer (zlib-backed). `pixels` is row-major, top row first.
void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);

/// RGB variant; `pixels` holds 3 bytes per pixel.
void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels);

}  // namespace roomtopo
