#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vti/image.hpp"

namespace vti {

// Portable float map. "Pf" = 1 channel, "PF" = 3 channels; negative scale
// marks little-endian data; scanlines are stored bottom-up.
ImageGrid read_pfm(const std::string& path);
void write_pfm(const std::string& path, const ImageGrid& image);

// Display images. Values are clamped to [0, 1] and sRGB-encoded with gamma
// 1/2.2 on write; reads decode back to linear. bit_depth is 8 or 16.
ImageGrid read_png(const std::string& path);
void write_png(const std::string& path, const ImageGrid& image, int bit_depth = 8);

// Raw 8-bit grayscale PNG without any transfer curve (label maps).
void write_png_raw8(const std::string& path, const std::vector<std::uint8_t>& gray,
                    int height, int width);
std::vector<std::uint8_t> read_png_raw8(const std::string& path, int& height, int& width);

}  // namespace vti
