#pragma once

// Binary raster files: 16-byte header followed by rows*cols little-endian
// float32 values, row-major.
//
//   offset 0  char[4]  "SSRT"
//   offset 4  u16      version (1)
//   offset 6  u32      rows
//   offset 10 u32      cols
//   offset 14 u8[2]    zero padding

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "supct/image.hpp"

namespace supct {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Raster {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<double> values;  // row-major, stored as float32 on disk
};

inline constexpr std::array<char, 4> kRasterMagic{'S', 'S', 'R', 'T'};
inline constexpr std::uint16_t kRasterVersion = 1;
inline constexpr std::size_t kRasterHeaderSize = 16;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& buf, std::size_t at, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[at + i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFu);
}

template <class T>
T get_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
inline void write_atomically(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace detail

inline std::vector<unsigned char> encode_raster(const Raster& r) {
    if (r.values.size() != static_cast<std::size_t>(r.rows) * r.cols)
        throw DimensionError("encode_raster: value count does not match rows*cols");
    std::vector<unsigned char> buf(kRasterHeaderSize + 4 * r.values.size(), 0);
    std::memcpy(buf.data(), kRasterMagic.data(), 4);
    detail::put_le<std::uint16_t>(buf, 4, kRasterVersion);
    detail::put_le<std::uint32_t>(buf, 6, r.rows);
    detail::put_le<std::uint32_t>(buf, 10, r.cols);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        const auto f = static_cast<float>(r.values[i]);
        detail::put_le<std::uint32_t>(buf, kRasterHeaderSize + 4 * i, std::bit_cast<std::uint32_t>(f));
    }
    return buf;
}

inline Raster decode_raster(const std::vector<unsigned char>& buf) {
    if (buf.size() < kRasterHeaderSize || std::memcmp(buf.data(), kRasterMagic.data(), 4) != 0)
        throw IoError("not an SSRT raster (bad magic)");
    const auto version = detail::get_le<std::uint16_t>(buf.data() + 4);
    if (version != kRasterVersion) throw IoError("unsupported SSRT version " + std::to_string(version));
    Raster r;
    r.rows = detail::get_le<std::uint32_t>(buf.data() + 6);
    r.cols = detail::get_le<std::uint32_t>(buf.data() + 10);
    const std::size_t n = static_cast<std::size_t>(r.rows) * r.cols;
    if (buf.size() != kRasterHeaderSize + 4 * n) throw IoError("SSRT payload size does not match header");
    r.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.values[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(buf.data() + kRasterHeaderSize + 4 * i));
    return r;
}

inline void write_raster(const std::filesystem::path& path, const Raster& r) {
    const auto buf = encode_raster(r);
    detail::write_atomically(path, buf.data(), buf.size());
}

inline Raster read_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_raster(buf);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void write_image(const std::filesystem::path& path, const Image& x) {
    write_raster(path, Raster{static_cast<std::uint32_t>(x.rows()), static_cast<std::uint32_t>(x.cols()),
                              std::vector<double>(x.values().begin(), x.values().end())});
}

inline Image read_image(const std::filesystem::path& path) {
    Raster r = read_raster(path);
    return Image(r.rows, r.cols, std::move(r.values));
}

inline void write_sinogram(const std::filesystem::path& path, const Sinogram& s) {
    write_raster(path, Raster{static_cast<std::uint32_t>(s.num_views()),
                              static_cast<std::uint32_t>(s.num_bins()),
                              std::vector<double>(s.values().begin(), s.values().end())});
}

inline Sinogram read_sinogram(const std::filesystem::path& path) {
    Raster r = read_raster(path);
    return Sinogram(r.rows, r.cols, std::move(r.values));
}

/// 8-bit grayscale PNG of `r`, mapping [lo, hi] linearly to [0, 255] with clipping.
inline void write_png(const std::filesystem::path& path, const Raster& r, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("write_png: empty display window");
    std::vector<unsigned char> pixels(r.values.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const double t = std::clamp((r.values[i] - lo) / (hi - lo), 0.0, 1.0);
        pixels[i] = static_cast<unsigned char>(std::lround(255.0 * t));
    }

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    std::FILE* fp = std::fopen(tmp.c_str(), "wb");
    if (!fp) throw IoError("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, r.cols, r.rows, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::uint32_t row = 0; row < r.rows; ++row)
        png_write_row(png, pixels.data() + static_cast<std::size_t>(row) * r.cols);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);

    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline void write_png(const std::filesystem::path& path, const Image& x, double lo = 0.0, double hi = 0.3) {
    write_png(path, Raster{static_cast<std::uint32_t>(x.rows()), static_cast<std::uint32_t>(x.cols()),
                           std::vector<double>(x.values().begin(), x.values().end())},
              lo, hi);
}

}  // namespace supct
