#include "vti/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "vti/errors.hpp"

namespace vti {

namespace {

constexpr double kGamma = 2.2;

bool host_is_little_endian() {
    return std::endian::native == std::endian::little;
}

void swap_float_bytes(float* values, std::size_t count) {
    auto* bytes = reinterpret_cast<unsigned char*>(values);
    for (std::size_t i = 0; i < count; ++i)
        std::swap(bytes[4 * i + 0], bytes[4 * i + 3]),
        std::swap(bytes[4 * i + 1], bytes[4 * i + 2]);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageGrid read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("read_pfm: cannot open " + path);

    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    if (!in || (magic != "PF" && magic != "Pf"))
        throw io_error("read_pfm: not a PFM file: " + path);
    if (width <= 0 || height <= 0 || scale == 0.0)
        throw io_error("read_pfm: bad header in " + path);
    in.get();  // single whitespace byte after the scale

    const int channels = (magic == "PF") ? 3 : 1;
    const std::size_t row_count = static_cast<std::size_t>(width) * channels;
    std::vector<float> row(row_count);

    ImageGrid image(height, width, channels);
    const bool data_little = scale < 0.0;
    for (int y = height - 1; y >= 0; --y) {  // bottom-up storage
        in.read(reinterpret_cast<char*>(row.data()), row_count * sizeof(float));
        if (!in) throw io_error("read_pfm: truncated data in " + path);
        if (data_little != host_is_little_endian())
            swap_float_bytes(row.data(), row_count);
        for (std::size_t i = 0; i < row_count; ++i)
            image.data[image.index(y, 0, 0) + i] = row[i];
    }
    return image;
}

void write_pfm(const std::string& path, const ImageGrid& image) {
    if (image.channels != 1 && image.channels != 3)
        throw invalid_input("write_pfm: PFM holds 1 or 3 channels, got " +
                            std::to_string(image.channels));
    if (image.empty()) throw invalid_input("write_pfm: empty image");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("write_pfm: cannot open " + path);

    out << (image.channels == 3 ? "PF" : "Pf") << "\n"
        << image.width << " " << image.height << "\n"
        << "-1.0" << "\n";

    const std::size_t row_count = static_cast<std::size_t>(image.width) * image.channels;
    std::vector<float> row(row_count);
    for (int y = image.height - 1; y >= 0; --y) {
        for (std::size_t i = 0; i < row_count; ++i)
            row[i] = static_cast<float>(image.data[image.index(y, 0, 0) + i]);
        if (!host_is_little_endian())
            swap_float_bytes(row.data(), row_count);
        out.write(reinterpret_cast<const char*>(row.data()), row_count * sizeof(float));
    }
    if (!out) throw io_error("write_pfm: write failed for " + path);
}

namespace {

[[noreturn]] void png_throw(png_structp, png_const_charp msg) {
    throw io_error(std::string("png: ") + msg);
}

void png_warn_ignore(png_structp, png_const_charp) {}

}  // namespace

ImageGrid read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw io_error("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_throw, png_warn_ignore);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, fp.get());
        png_read_info(png, info);

        png_set_expand(png);             // palette / low bit depth -> 8-bit
        png_set_strip_alpha(png);
        if (png_get_bit_depth(png, info) == 16 && host_is_little_endian())
            png_set_swap(png);
        png_read_update_info(png, info);

        const int width = static_cast<int>(png_get_image_width(png, info));
        const int height = static_cast<int>(png_get_image_height(png, info));
        const int depth = png_get_bit_depth(png, info);
        const int channels = png_get_channels(png, info);
        if (channels != 1 && channels != 3)
            throw io_error("read_png: unsupported channel count in " + path);

        const std::size_t stride = png_get_rowbytes(png, info);
        std::vector<std::uint8_t> raw(stride * height);
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y) rows[y] = raw.data() + y * stride;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);

        const double denom = depth == 16 ? 65535.0 : 255.0;
        ImageGrid image(height, width, channels);
        for (int y = 0; y < height; ++y) {
            const std::uint8_t* row = rows[y];
            for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i) {
                double encoded;
                if (depth == 16)
                    encoded = reinterpret_cast<const std::uint16_t*>(row)[i] / denom;
                else
                    encoded = row[i] / denom;
                image.data[image.index(y, 0, 0) + i] = std::pow(encoded, kGamma);
            }
        }
        png_destroy_read_struct(&png, &info, nullptr);
        return image;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
}

void write_png(const std::string& path, const ImageGrid& image, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw invalid_input("write_png: bit depth must be 8 or 16");
    if (image.channels != 1 && image.channels != 3)
        throw invalid_input("write_png: 1 or 3 channels required");
    if (image.empty()) throw invalid_input("write_png: empty image");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw io_error("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_throw, png_warn_ignore);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, fp.get());
        const int color = image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
        png_set_IHDR(png, info, image.width, image.height, bit_depth, color,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        const double peak = bit_depth == 16 ? 65535.0 : 255.0;
        const std::size_t row_values = static_cast<std::size_t>(image.width) * image.channels;
        std::vector<std::uint8_t> row(row_values * (bit_depth / 8));
        for (int y = 0; y < image.height; ++y) {
            for (std::size_t i = 0; i < row_values; ++i) {
                const double v = std::clamp(image.data[image.index(y, 0, 0) + i], 0.0, 1.0);
                const double encoded = std::pow(v, 1.0 / kGamma);
                const auto q = static_cast<std::uint32_t>(std::lround(encoded * peak));
                if (bit_depth == 16) {
                    row[2 * i] = static_cast<std::uint8_t>(q >> 8);  // network order
                    row[2 * i + 1] = static_cast<std::uint8_t>(q & 0xFF);
                } else {
                    row[i] = static_cast<std::uint8_t>(q);
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
}

void write_png_raw8(const std::string& path, const std::vector<std::uint8_t>& gray,
                    int height, int width) {
    if (gray.size() != static_cast<std::size_t>(height) * width)
        throw invalid_input("write_png_raw8: size mismatch");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw io_error("write_png_raw8: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_throw, png_warn_ignore);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < height; ++y)
            png_write_row(png, const_cast<png_bytep>(gray.data() + static_cast<std::size_t>(y) * width));
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
}

std::vector<std::uint8_t> read_png_raw8(const std::string& path, int& height, int& width) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw io_error("read_png_raw8: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_throw, png_warn_ignore);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, fp.get());
        png_read_info(png, info);
        png_set_expand(png);
        png_set_strip_alpha(png);
        png_set_strip_16(png);
        png_set_rgb_to_gray(png, 1, -1.0, -1.0);
        png_read_update_info(png, info);

        width = static_cast<int>(png_get_image_width(png, info));
        height = static_cast<int>(png_get_image_height(png, info));
        const std::size_t stride = png_get_rowbytes(png, info);

        std::vector<std::uint8_t> raw(stride * height);
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y) rows[y] = raw.data() + y * stride;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        png_destroy_read_struct(&png, &info, nullptr);

        std::vector<std::uint8_t> out(static_cast<std::size_t>(height) * width);
        for (int y = 0; y < height; ++y)
            std::memcpy(out.data() + static_cast<std::size_t>(y) * width,
                        raw.data() + static_cast<std::size_t>(y) * stride, width);
        return out;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
}

}  // namespace vti
