#pragma once

// JPEG-style perceptual transcoder: BT.601 full-range color transform, 4:2:0
// chroma subsampling, blockwise orthonormal DCT, Annex K quantization with the
// libjpeg quality law, and the inverse path. No entropy coding is performed;
// the statistics report the entropy of the quantized coefficients instead.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pn/error.hpp"
#include "pn/helmholtz.hpp"

namespace pn::codec {

struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // packed R,G,B row-major

    ImageRGB() = default;
    ImageRGB(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    bool operator==(const ImageRGB&) const = default;
};

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> samples;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), samples(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const Plane&) const = default;
};

struct ImageYUV420 {
    Plane y;
    Plane u;
    Plane v;
};

using CoeffBlock = std::array<double, 64>;
using SampleBlock = std::array<double, 64>;
using QuantizedBlock = std::array<int, 64>;

enum class TableRole { Luminance, Chrominance };
enum class ScaleMode { Continuous, Integer };

struct QuantTable {
    TableRole role = TableRole::Luminance;
    std::array<double, 64> divisors{}; // natural (row-major) order

    double sum() const {
        double s = 0;
        for (double d : divisors) s += d;
        return s;
    }
};

struct CodecStats {
    int quality = 0;
    double coefficient_entropy = 0;  // bits per coefficient
    double nonzero_fraction = 0;
    double psnr = 0;                 // dB, +inf for identical images
};

// Zig-zag scan position -> natural index.
inline constexpr std::array<int, 64> kZigZag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// ITU-T T.81 Annex K, tables K.1 and K.2.
inline constexpr std::array<int, 64> kLuminanceBase = {
    16, 11, 10, 16, 24,  40,  51,  61,
    12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,
    14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,
    24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99};

inline constexpr std::array<int, 64> kChrominanceBase = {
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99};

inline QuantTable base_table(TableRole role) {
    QuantTable t;
    t.role = role;
    const auto& src = role == TableRole::Luminance ? kLuminanceBase : kChrominanceBase;
    for (int i = 0; i < 64; ++i) t.divisors[i] = src[i];
    return t;
}

inline void check_quality(int q) {
    if (q < 1 || q > 100) throw InvalidQuality("quality must be in [1,100], got " + std::to_string(q));
}

// libjpeg's quality law, real-valued: 5000/q below 50, 200-2q above.
inline double quality_scale_factor(double q) {
    return q < 50 ? 5000.0 / q : 200.0 - 2.0 * q;
}

inline QuantTable scale_quant_table(const QuantTable& base, int q, ScaleMode mode) {
    check_quality(q);
    QuantTable out = base;
    if (mode == ScaleMode::Continuous) {
        const double sf = quality_scale_factor(q);
        for (double& d : out.divisors) d = d * sf / 100.0;
        return out;
    }
    // jpeg_quality_scaling() works in integers
    const long sf = q < 50 ? 5000 / q : 200 - 2 * q;
    for (double& d : out.divisors) {
        long v = (static_cast<long>(d) * sf + 50) / 100;
        d = static_cast<double>(std::clamp(v, 1L, 255L));
    }
    return out;
}

namespace detail {

// basis[u][x] = a(u) cos((2x+1) u pi / 16), orthonormal scaling
inline const std::array<std::array<double, 8>, 8>& dct_basis() {
    static const auto basis = [] {
        std::array<std::array<double, 8>, 8> b{};
        for (int u = 0; u < 8; ++u) {
            const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x) b[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        }
        return b;
    }();
    return basis;
}

} // namespace detail

// Orthonormal 2-D DCT-II of 64 samples in [0,255]; level shift applied here.
inline CoeffBlock forward_dct(std::span<const double, 64> samples) {
    const auto& b = detail::dct_basis();
    std::array<double, 64> tmp{};
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double s = 0;
            for (int x = 0; x < 8; ++x) s += b[u][x] * (samples[y * 8 + x] - 128.0);
            tmp[y * 8 + u] = s;
        }
    CoeffBlock out{};
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            double s = 0;
            for (int y = 0; y < 8; ++y) s += b[v][y] * tmp[y * 8 + u];
            out[v * 8 + u] = s;
        }
    return out;
}

// Exact inverse of forward_dct (level shift restored), before any rounding.
inline SampleBlock inverse_dct(std::span<const double, 64> coeffs) {
    const auto& b = detail::dct_basis();
    std::array<double, 64> tmp{};
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double s = 0;
            for (int v = 0; v < 8; ++v) s += b[v][y] * coeffs[v * 8 + u];
            tmp[y * 8 + u] = s;
        }
    SampleBlock out{};
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int u = 0; u < 8; ++u) s += b[u][x] * tmp[y * 8 + u];
            out[y * 8 + x] = s + 128.0;
        }
    return out;
}

inline QuantizedBlock quantize_block(const CoeffBlock& coeffs, const QuantTable& table) {
    QuantizedBlock q{};
    for (int i = 0; i < 64; ++i) q[i] = static_cast<int>(std::lround(coeffs[i] / table.divisors[i]));
    return q;
}

inline CoeffBlock dequantize_block(const QuantizedBlock& q, const QuantTable& table) {
    CoeffBlock c{};
    for (int i = 0; i < 64; ++i) c[i] = q[i] * table.divisors[i];
    return c;
}

inline std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline ImageYUV420 rgb_to_yuv420(const ImageRGB& img) {
    if (img.width <= 0 || img.height <= 0) throw InvalidInput("image has zero dimension");
    if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3)
        throw InvalidInput("pixel buffer length does not match width*height*3");

    const int w = img.width, h = img.height;
    const int cw = (w + 1) / 2, ch = (h + 1) / 2;
    ImageYUV420 out{Plane(w, h), Plane(cw, ch), Plane(cw, ch)};
    std::vector<double> u_full(static_cast<std::size_t>(w) * h), v_full(u_full.size());

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
            out.y.at(x, y) = to_u8(0.299 * r + 0.587 * g + 0.114 * b);
            u_full[static_cast<std::size_t>(y) * w + x] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
            v_full[static_cast<std::size_t>(y) * w + x] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
        }

    // 2x2 box average; odd edges average whatever pixels exist
    for (int cy = 0; cy < ch; ++cy)
        for (int cx = 0; cx < cw; ++cx) {
            double su = 0, sv = 0;
            int n = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int x = 2 * cx + dx, y = 2 * cy + dy;
                    if (x >= w || y >= h) continue;
                    su += u_full[static_cast<std::size_t>(y) * w + x];
                    sv += v_full[static_cast<std::size_t>(y) * w + x];
                    ++n;
                }
            out.u.at(cx, cy) = to_u8(su / n);
            out.v.at(cx, cy) = to_u8(sv / n);
        }
    return out;
}

inline ImageRGB yuv420_to_rgb(const ImageYUV420& yuv) {
    const int w = yuv.y.width, h = yuv.y.height;
    if (w <= 0 || h <= 0) throw InvalidInput("image has zero dimension");
    ImageRGB out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double Y = yuv.y.at(x, y);
            const double U = yuv.u.at(x / 2, y / 2) - 128.0;
            const double V = yuv.v.at(x / 2, y / 2) - 128.0;
            out.at(x, y, 0) = to_u8(Y + 1.402 * V);
            out.at(x, y, 1) = to_u8(Y - 0.344136 * U - 0.714136 * V);
            out.at(x, y, 2) = to_u8(Y + 1.772 * U);
        }
    return out;
}

inline double psnr(const ImageRGB& a, const ImageRGB& b) {
    if (a.width != b.width || a.height != b.height) throw InvalidInput("psnr: size mismatch");
    double se = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = double(a.pixels[i]) - double(b.pixels[i]);
        se += d * d;
    }
    if (se == 0) return std::numeric_limits<double>::infinity();
    const double mse = se / static_cast<double>(a.pixels.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

// Runs one plane through DCT -> quantize -> dequantize -> IDCT. Edge blocks
// replicate the last row/column. Quantized values are appended to `symbols`.
inline Plane transcode_plane(const Plane& in, const QuantTable& table, std::vector<int>& symbols) {
    Plane out(in.width, in.height);
    const int bw = (in.width + 7) / 8, bh = (in.height + 7) / 8;
    std::array<double, 64> block{};
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const int sx = std::min(bx * 8 + x, in.width - 1);
                    const int sy = std::min(by * 8 + y, in.height - 1);
                    block[y * 8 + x] = in.at(sx, sy);
                }
            const QuantizedBlock q = quantize_block(forward_dct(block), table);
            symbols.insert(symbols.end(), q.begin(), q.end());
            const SampleBlock rec = inverse_dct(dequantize_block(q, table));
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const int ox = bx * 8 + x, oy = by * 8 + y;
                    if (ox < in.width && oy < in.height) out.at(ox, oy) = to_u8(rec[y * 8 + x]);
                }
        }
    return out;
}

} // namespace detail

struct TranscodeResult {
    ImageRGB image;
    CodecStats stats;
};

inline TranscodeResult transcode_image(const ImageRGB& img, int q) {
    check_quality(q);
    const ImageYUV420 yuv = rgb_to_yuv420(img);
    const QuantTable luma = scale_quant_table(base_table(TableRole::Luminance), q, ScaleMode::Integer);
    const QuantTable chroma = scale_quant_table(base_table(TableRole::Chrominance), q, ScaleMode::Integer);

    std::vector<int> symbols;
    ImageYUV420 rec{detail::transcode_plane(yuv.y, luma, symbols), detail::transcode_plane(yuv.u, chroma, symbols),
                    detail::transcode_plane(yuv.v, chroma, symbols)};

    TranscodeResult r{yuv420_to_rgb(rec), {}};
    std::map<int, double> hist;
    std::size_t nonzero = 0;
    for (int s : symbols) {
        hist[s] += 1;
        if (s != 0) ++nonzero;
    }
    std::vector<double> counts;
    counts.reserve(hist.size());
    for (const auto& [sym, n] : hist) counts.push_back(n);
    r.stats.quality = q;
    r.stats.coefficient_entropy = helmholtz::shannon_entropy(counts);
    r.stats.nonzero_fraction = static_cast<double>(nonzero) / static_cast<double>(symbols.size());
    r.stats.psnr = psnr(img, r.image);
    return r;
}

// Raw fixture format: width, height as uint32 little-endian, then packed RGB.
inline void write_raw_rgb(const std::filesystem::path& path, const ImageRGB& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open " + path.string() + " for writing");
    auto put32 = [&](std::uint32_t v) {
        const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
        f.write(b, 4);
    };
    put32(static_cast<std::uint32_t>(img.width));
    put32(static_cast<std::uint32_t>(img.height));
    f.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline ImageRGB read_raw_rgb(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open " + path.string());
    unsigned char hdr[8];
    if (!f.read(reinterpret_cast<char*>(hdr), 8)) throw TruncatedFile(path.string() + ": missing raw RGB header");
    auto get32 = [&](int o) {
        return std::uint32_t(hdr[o]) | std::uint32_t(hdr[o + 1]) << 8 | std::uint32_t(hdr[o + 2]) << 16 |
               std::uint32_t(hdr[o + 3]) << 24;
    };
    const std::uint32_t w = get32(0), h = get32(4);
    if (w == 0 || h == 0 || w > 65535 || h > 65535) throw InvalidInput(path.string() + ": bad raw RGB dimensions");
    ImageRGB img(static_cast<int>(w), static_cast<int>(h));
    if (!f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size())))
        throw TruncatedFile(path.string() + ": raw RGB payload shorter than header implies");
    return img;
}

} // namespace pn::codec
