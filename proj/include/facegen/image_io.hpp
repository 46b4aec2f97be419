#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "facegen/tensor.hpp"

namespace facegen {

// ---------------------------------------------------------------------------
// 8-bit <-> unit-interval conversion
// ---------------------------------------------------------------------------

inline std::uint8_t to_byte(double v) {
    double scaled = std::lround(std::min(1.0, std::max(0.0, v)) * 255.0);
    return static_cast<std::uint8_t>(scaled);
}

inline double from_byte(std::uint8_t b) { return b / 255.0; }

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

// Skips whitespace and '#' comments in PNM headers.
inline int next_pnm_token(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            return c;
        }
        c = in.get();
    }
    throw std::runtime_error("truncated PNM header");
}

inline int read_pnm_int(std::istream& in) {
    int c = next_pnm_token(in);
    if (!std::isdigit(c)) throw std::runtime_error("malformed PNM header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PPM / PGM
// ---------------------------------------------------------------------------

inline void save_ppm(const Image& img, const std::string& path) {
    if (img.channels() != 3) throw std::invalid_argument("save_ppm: expects 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c)
                out.put(static_cast<char>(to_byte(img.at(c, y, x))));
    if (!out) throw std::runtime_error("short write: " + path);
}

/// Writes the first channel as binary PGM (P5); used for mask inspection.
inline void save_pgm(const Tensor3& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.put(static_cast<char>(to_byte(img.at(0, y, x))));
    if (!out) throw std::runtime_error("short write: " + path);
}

inline Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '6' && magic[1] != '5'))
        throw std::runtime_error("not a binary PPM/PGM file: " + path);
    bool gray = magic[1] == '5';
    int w = detail::read_pnm_int(in);
    int h = detail::read_pnm_int(in);
    int maxval = detail::read_pnm_int(in);
    if (maxval != 255) throw std::runtime_error("unsupported PNM maxval: " + path);
    int nch = gray ? 1 : 3;
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * nch);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error("truncated PNM data: " + path);
    Image img(3, h, w);
    std::size_t p = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (gray) {
                double v = from_byte(raw[p++]);
                for (int c = 0; c < 3; ++c) img.at(c, y, x) = v;
            } else {
                for (int c = 0; c < 3; ++c) img.at(c, y, x) = from_byte(raw[p++]);
            }
        }
    return img;
}

// ---------------------------------------------------------------------------
// PNG (8-bit, via zlib)
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32be(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void append_png_chunk(std::vector<std::uint8_t>& out, const char type[4],
                             const std::vector<std::uint8_t>& payload) {
    put_u32be(out, static_cast<std::uint32_t>(payload.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + payload.size())));
    put_u32be(out, crc);
}

inline int png_paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

inline void save_png(const Image& img, const std::string& path) {
    if (img.channels() != 3) throw std::invalid_argument("save_png: expects 3 channels");
    int w = img.width(), h = img.height();

    // Raw scanlines, filter type 0 per row.
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(h) * (1 + 3 * w));
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) raw.push_back(to_byte(img.at(c, y, x)));
    }

    uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (::compress2(compressed.data(), &bound, raw.data(),
                    static_cast<uLong>(raw.size()), Z_BEST_SPEED) != Z_OK)
        throw std::runtime_error("PNG deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<std::uint8_t> ihdr;
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(w));
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // color type: truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    detail::append_png_chunk(out, "IHDR", ihdr);
    detail::append_png_chunk(out, "IDAT", compressed);
    detail::append_png_chunk(out, "IEND", {});
    detail::write_file_bytes(path, out);
}

/// Reads 8-bit grayscale / RGB / RGBA non-interlaced PNG; alpha is dropped.
inline Image load_png(const std::string& path) {
    std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw std::runtime_error("not a PNG file: " + path);

    int w = 0, h = 0, bit_depth = 0, color_type = 0;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        std::uint32_t len = detail::get_u32be(&bytes[pos]);
        std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
        if (pos + 12 + len > bytes.size())
            throw std::runtime_error("truncated PNG chunk: " + path);
        const std::uint8_t* payload = &bytes[pos + 8];
        if (type == "IHDR") {
            w = static_cast<int>(detail::get_u32be(payload));
            h = static_cast<int>(detail::get_u32be(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw std::runtime_error("interlaced PNG unsupported: " + path);
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (w <= 0 || h <= 0) throw std::runtime_error("bad PNG header: " + path);
    if (bit_depth != 8 || (color_type != 0 && color_type != 2 && color_type != 6))
        throw std::runtime_error("unsupported PNG format (need 8-bit gray/RGB/RGBA): " + path);

    int nch = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
    std::size_t stride = static_cast<std::size_t>(w) * nch;
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(h) * (stride + 1));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (::uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw std::runtime_error("PNG inflate failed: " + path);

    // Undo per-row filters in place (bpp = bytes per pixel).
    std::vector<std::uint8_t> pix(static_cast<std::size_t>(h) * stride);
    int bpp = nch;
    for (int y = 0; y < h; ++y) {
        std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = &raw[y * (stride + 1) + 1];
        std::uint8_t* dst = &pix[y * stride];
        const std::uint8_t* prev = y > 0 ? &pix[(y - 1) * stride] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<std::size_t>(bpp) ? dst[i - bpp] : 0;
            int b = prev ? prev[i] : 0;
            int c = (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
            int x = src[i];
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += detail::png_paeth(a, b, c); break;
                default: throw std::runtime_error("bad PNG filter type: " + path);
            }
            dst[i] = static_cast<std::uint8_t>(x);
        }
    }

    Image img(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* p = &pix[y * stride + static_cast<std::size_t>(x) * nch];
            if (nch == 1) {
                for (int c = 0; c < 3; ++c) img.at(c, y, x) = from_byte(p[0]);
            } else {
                for (int c = 0; c < 3; ++c) img.at(c, y, x) = from_byte(p[c]);
            }
        }
    return img;
}

/// Dispatches on file extension; .png, .ppm, .pgm are understood.
inline Image load_image(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (ext == ".png") return load_png(path);
    if (ext == ".ppm" || ext == ".pgm") return load_ppm(path);
    throw std::runtime_error("unsupported image extension '" + ext + "': " + path);
}

inline void save_image(const Image& img, const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (ext == ".png") return save_png(img, path);
    if (ext == ".ppm") return save_ppm(img, path);
    if (ext == ".pgm") return save_pgm(img, path);
    throw std::runtime_error("unsupported image extension '" + ext + "': " + path);
}

}  // namespace facegen
