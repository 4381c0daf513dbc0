#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "swag/common.hpp"
#include "swag/tensor.hpp"

#ifdef SWAG_ENABLE_PNG
#include <zlib.h>
#endif

namespace swag {

// Per-channel normalization constants applied to [0,1] RGB.
inline constexpr std::array<double, 3> kChannelMean = {0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kChannelStd = {0.229, 0.224, 0.225};

// Interleaved 8-bit RGB image, row-major from the top-left corner.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // width * height * 3

    ImageBuffer() = default;
    ImageBuffer(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
        if (w < 1 || h < 1) throw ConfigError("image dims must be >= 1");
    }

    std::uint8_t& at(int x, int y, int c) {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    bool operator==(const ImageBuffer& o) const {
        return width == o.width && height == o.height && rgb == o.rgb;
    }
};

namespace detail {

// Reads one PNM token, skipping whitespace and '#' comments.
inline std::string pnm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw ParseError("unexpected end of PNM header", start);
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos));
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file(const std::string& path, const void* data, std::size_t len) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!f) throw IoError("short write to " + path);
}

}  // namespace detail

// --- PPM (P6, maxval 255) ---------------------------------------------------

inline ImageBuffer decode_ppm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (detail::pnm_token(bytes, pos) != "P6") throw ParseError("not a P6 PPM file", 0);
    long w, h, maxval;
    try {
        w = std::stol(detail::pnm_token(bytes, pos));
        h = std::stol(detail::pnm_token(bytes, pos));
        maxval = std::stol(detail::pnm_token(bytes, pos));
    } catch (const std::exception&) {
        throw ParseError("malformed PPM header", pos);
    }
    if (w < 1 || h < 1) throw ParseError("invalid PPM dimensions", pos);
    if (maxval != 255) throw ParseError("unsupported PPM maxval (must be 255)", pos);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw ParseError("missing whitespace after PPM maxval", pos);
    ++pos;  // exactly one whitespace byte separates header and payload
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (bytes.size() - pos < need)
        throw ParseError("truncated PPM payload", bytes.size());
    ImageBuffer img(static_cast<int>(w), static_cast<int>(h));
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
              bytes.begin() + static_cast<std::ptrdiff_t>(pos + need), img.rgb.begin());
    return img;
}

inline std::vector<std::uint8_t> encode_ppm(const ImageBuffer& img) {
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width,
                                img.height);
    std::vector<std::uint8_t> out(header, header + n);
    out.insert(out.end(), img.rgb.begin(), img.rgb.end());
    return out;
}

inline ImageBuffer load_ppm(const std::string& path) {
    return decode_ppm(detail::read_file(path));
}

inline void save_ppm(const std::string& path, const ImageBuffer& img) {
    const auto bytes = encode_ppm(img);
    detail::write_file(path, bytes.data(), bytes.size());
}

// --- PNG (8-bit RGB, no interlace), gated on zlib ---------------------------

#ifdef SWAG_ENABLE_PNG

namespace detail {

inline void png_chunk(std::vector<std::uint8_t>& out, const char type[4],
                      const std::vector<std::uint8_t>& payload) {
    auto push_u32 = [&out](std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    push_u32(static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    push_u32(crc32(out.data() + crc_start, out.size() - crc_start));
}

inline std::uint32_t png_read_u32(const std::vector<std::uint8_t>& b, std::size_t pos) {
    return (std::uint32_t(b[pos]) << 24) | (std::uint32_t(b[pos + 1]) << 16) |
           (std::uint32_t(b[pos + 2]) << 8) | std::uint32_t(b[pos + 3]);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    std::vector<std::uint8_t> ihdr(13);
    auto put_u32 = [](std::uint8_t* p, std::uint32_t v) {
        p[0] = static_cast<std::uint8_t>(v >> 24);
        p[1] = static_cast<std::uint8_t>(v >> 16);
        p[2] = static_cast<std::uint8_t>(v >> 8);
        p[3] = static_cast<std::uint8_t>(v);
    };
    put_u32(ihdr.data(), static_cast<std::uint32_t>(img.width));
    put_u32(ihdr.data() + 4, static_cast<std::uint32_t>(img.height));
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // color type: truecolor
    ihdr[10] = 0;  // compression
    ihdr[11] = 0;  // filter
    ihdr[12] = 0;  // no interlace
    detail::png_chunk(out, "IHDR", ihdr);

    // Filter type 0 on every scanline.
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        raw[(stride + 1) * static_cast<std::size_t>(y)] = 0;
        std::copy(img.rgb.begin() + static_cast<std::ptrdiff_t>(stride * y),
                  img.rgb.begin() + static_cast<std::ptrdiff_t>(stride * (y + 1)),
                  raw.begin() + static_cast<std::ptrdiff_t>((stride + 1) * y + 1));
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> idat(bound);
    if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw IoError("PNG deflate failed");
    idat.resize(bound);
    detail::png_chunk(out, "IDAT", idat);
    detail::png_chunk(out, "IEND", {});
    return out;
}

inline ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() < 8 || !std::equal(sig, sig + 8, bytes.begin()))
        throw ParseError("not a PNG file", 0);
    std::size_t pos = 8;
    int width = 0, height = 0;
    bool have_ihdr = false;
    std::vector<std::uint8_t> idat;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = detail::png_read_u32(bytes, pos);
        if (pos + 12 + len > bytes.size()) throw ParseError("truncated PNG chunk", pos);
        const std::string type(bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                               bytes.begin() + static_cast<std::ptrdiff_t>(pos + 8));
        const std::uint8_t* payload = bytes.data() + pos + 8;
        const std::uint32_t stored_crc = detail::png_read_u32(bytes, pos + 8 + len);
        if (detail::crc32(bytes.data() + pos + 4, 4 + len) != stored_crc)
            throw ParseError("PNG chunk CRC mismatch", pos);
        if (type == "IHDR") {
            if (len != 13) throw ParseError("bad IHDR length", pos);
            width = static_cast<int>(detail::png_read_u32(bytes, pos + 8));
            height = static_cast<int>(detail::png_read_u32(bytes, pos + 12));
            if (payload[8] != 8 || payload[9] != 2 || payload[12] != 0)
                throw ParseError("unsupported PNG format (need 8-bit RGB, no interlace)",
                                 pos);
            have_ihdr = true;
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (!have_ihdr || width < 1 || height < 1) throw ParseError("missing PNG IHDR", pos);
    const std::size_t stride = static_cast<std::size_t>(width) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * static_cast<std::size_t>(height));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) !=
            Z_OK ||
        raw_len != raw.size())
        throw ParseError("PNG inflate failed", pos);

    ImageBuffer img(width, height);
    auto paeth = [](int a, int b, int c) {
        const int p = a + b - c, pa = std::abs(p - a), pb = std::abs(p - b),
                  pc = std::abs(p - c);
        if (pa <= pb && pa <= pc) return a;
        return pb <= pc ? b : c;
    };
    std::vector<std::uint8_t> prev(stride, 0);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* src = raw.data() + (stride + 1) * static_cast<std::size_t>(y);
        const int filter = src[0];
        std::uint8_t* dst = img.rgb.data() + stride * static_cast<std::size_t>(y);
        for (std::size_t i = 0; i < stride; ++i) {
            const int x = src[1 + i];
            const int a = i >= 3 ? dst[i - 3] : 0;
            const int b = prev[i];
            const int c = i >= 3 ? prev[i - 3] : 0;
            int v;
            switch (filter) {
                case 0: v = x; break;
                case 1: v = x + a; break;
                case 2: v = x + b; break;
                case 3: v = x + (a + b) / 2; break;
                case 4: v = x + paeth(a, b, c); break;
                default: throw ParseError("unknown PNG filter type", (stride + 1) * y);
            }
            dst[i] = static_cast<std::uint8_t>(v & 0xFF);
        }
        std::copy(dst, dst + stride, prev.begin());
    }
    return img;
}

inline ImageBuffer load_png(const std::string& path) {
    return decode_png(detail::read_file(path));
}

inline void save_png(const std::string& path, const ImageBuffer& img) {
    const auto bytes = encode_png(img);
    detail::write_file(path, bytes.data(), bytes.size());
}

#endif  // SWAG_ENABLE_PNG

// Loads by extension: .ppm always, .png when compiled in.
inline ImageBuffer load_image(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".ppm") return load_ppm(path);
#ifdef SWAG_ENABLE_PNG
    if (ext == ".png") return load_png(path);
#endif
    throw ConfigError("unsupported image extension: " + path);
}

// --- Channel normalization ---------------------------------------------------

// (v/255 - mean_c) / std_c, laid out as a 1x3xHxW tensor.
template <typename S>
Tensor<S> normalize(const ImageBuffer& img) {
    Tensor<S> t({1, 3, img.height, img.width});
    S* out = t.data().data();
    const std::int64_t hw = static_cast<std::int64_t>(img.width) * img.height;
    for (int c = 0; c < 3; ++c) {
        const double mean = kChannelMean[static_cast<std::size_t>(c)];
        const double inv_std = 1.0 / kChannelStd[static_cast<std::size_t>(c)];
        S* plane = out + c * hw;
        for (std::int64_t i = 0; i < hw; ++i)
            plane[i] = static_cast<S>(
                (img.rgb[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(c)] /
                     255.0 -
                 mean) *
                inv_std);
    }
    return t;
}

// Inverts normalize() and clamps to [0,255]; round half up.
template <typename S>
ImageBuffer denormalize(const Tensor<S>& t) {
    if (t.ndim() != 4 || t.dim(0) != 1 || t.dim(1) != 3)
        throw ConfigError("denormalize: expected a 1x3xHxW tensor");
    const int h = static_cast<int>(t.dim(2));
    const int w = static_cast<int>(t.dim(3));
    ImageBuffer img(w, h);
    const std::int64_t hw = static_cast<std::int64_t>(w) * h;
    const S* in = t.data().data();
    for (int c = 0; c < 3; ++c) {
        const double mean = kChannelMean[static_cast<std::size_t>(c)];
        const double sd = kChannelStd[static_cast<std::size_t>(c)];
        const S* plane = in + c * hw;
        for (std::int64_t i = 0; i < hw; ++i) {
            const double v = (static_cast<double>(plane[i]) * sd + mean) * 255.0;
            const double q = std::floor(v + 0.5);
            img.rgb[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(c)] =
                static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, q)));
        }
    }
    return img;
}

// --- Resize -------------------------------------------------------------------

enum class ResizeMode { nearest, bilinear };

inline ImageBuffer resize(const ImageBuffer& src, int w, int h, ResizeMode mode) {
    if (w < 1 || h < 1) throw ConfigError("resize: target dims must be >= 1");
    if (w == src.width && h == src.height) return src;
    ImageBuffer dst(w, h);
    const double sx = static_cast<double>(src.width) / w;
    const double sy = static_cast<double>(src.height) / h;
    if (mode == ResizeMode::nearest) {
        for (int y = 0; y < h; ++y) {
            const int iy = std::min(src.height - 1, static_cast<int>((y + 0.5) * sy));
            for (int x = 0; x < w; ++x) {
                const int ix = std::min(src.width - 1, static_cast<int>((x + 0.5) * sx));
                for (int c = 0; c < 3; ++c) dst.at(x, y, c) = src.at(ix, iy, c);
            }
        }
        return dst;
    }
    for (int y = 0; y < h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::max(0, std::min(src.height - 1, static_cast<int>(std::floor(fy))));
        const int y1 = std::min(src.height - 1, y0 + 1);
        const double wy = std::min(1.0, std::max(0.0, fy - y0));
        for (int x = 0; x < w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 =
                std::max(0, std::min(src.width - 1, static_cast<int>(std::floor(fx))));
            const int x1 = std::min(src.width - 1, x0 + 1);
            const double wx = std::min(1.0, std::max(0.0, fx - x0));
            for (int c = 0; c < 3; ++c) {
                const double top = src.at(x0, y0, c) * (1 - wx) + src.at(x1, y0, c) * wx;
                const double bot = src.at(x0, y1, c) * (1 - wx) + src.at(x1, y1, c) * wx;
                const double v = top * (1 - wy) + bot * wy;
                dst.at(x, y, c) = static_cast<std::uint8_t>(
                    std::min(255.0, std::max(0.0, std::floor(v + 0.5))));
            }
        }
    }
    return dst;
}

}  // namespace swag
