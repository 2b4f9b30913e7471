#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pn/image_codec.hpp"

using namespace pn::codec;

namespace {

ImageRGB solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    ImageRGB img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
    return img;
}

// Low-frequency color field with a little seeded texture.
ImageRGB smooth_image(int w, int h, std::uint64_t seed, double texture = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    double a[3], fx[3], fy[3], ph[3];
    for (int c = 0; c < 3; ++c) {
        a[c] = 20 + 30 * u(rng);
        fx[c] = 0.2 + 0.5 * u(rng);
        fy[c] = 0.2 + 0.5 * u(rng);
        ph[c] = 6.28 * u(rng);
    }
    std::normal_distribution<double> n(0, texture);
    ImageRGB img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 128 + a[c] * std::sin(fx[c] * x * 6.28 / w + fy[c] * y * 6.28 / h + ph[c]);
                if (texture > 0) v += n(rng);
                img.at(x, y, c) = to_u8(v);
            }
    return img;
}

std::array<double, 64> random_block(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 255);
    std::array<double, 64> b{};
    for (double& v : b) v = u(rng);
    return b;
}

} // namespace

TEST(QuantTables, AnnexKChecksums) {
    // Independent oracle: sum the 64 published entries.
    EXPECT_EQ(std::accumulate(kLuminanceBase.begin(), kLuminanceBase.end(), 0), 3688);
    EXPECT_EQ(std::accumulate(kChrominanceBase.begin(), kChrominanceBase.end(), 0), 5505);
    EXPECT_DOUBLE_EQ(base_table(TableRole::Luminance).sum(), 3688.0);
    EXPECT_DOUBLE_EQ(base_table(TableRole::Chrominance).sum(), 5505.0);
    EXPECT_EQ(kLuminanceBase[0], 16);
    EXPECT_EQ(kLuminanceBase[63], 99);
    EXPECT_EQ(kChrominanceBase[0], 17);
}

TEST(QuantTables, ZigZagIsPermutation) {
    std::array<int, 64> seen{};
    for (int i : kZigZag) ++seen.at(i);
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_EQ(kZigZag[0], 0);
    EXPECT_EQ(kZigZag[1], 1);
    EXPECT_EQ(kZigZag[2], 8);
    EXPECT_EQ(kZigZag[63], 63);
}

TEST(ScaleQuantTable, Q50IsIdentity) {
    for (auto role : {TableRole::Luminance, TableRole::Chrominance})
        for (auto mode : {ScaleMode::Continuous, ScaleMode::Integer}) {
            const auto base = base_table(role);
            const auto t = scale_quant_table(base, 50, mode);
            for (int i = 0; i < 64; ++i) EXPECT_DOUBLE_EQ(t.divisors[i], base.divisors[i]);
        }
}

TEST(ScaleQuantTable, Q100IntegerIsAllOnes) {
    const auto t = scale_quant_table(base_table(TableRole::Luminance), 100, ScaleMode::Integer);
    for (double d : t.divisors) EXPECT_EQ(d, 1.0);
}

TEST(ScaleQuantTable, Q25ContinuousDoubles) {
    const auto base = base_table(TableRole::Chrominance);
    const auto t = scale_quant_table(base, 25, ScaleMode::Continuous);
    for (int i = 0; i < 64; ++i) EXPECT_DOUBLE_EQ(t.divisors[i], 2.0 * base.divisors[i]);
}

TEST(ScaleQuantTable, IntegerModeMatchesReferenceFormula) {
    const auto base = base_table(TableRole::Luminance);
    for (int q = 1; q <= 100; ++q) {
        const int sf = q < 50 ? 5000 / q : 200 - 2 * q;
        const auto t = scale_quant_table(base, q, ScaleMode::Integer);
        for (int i = 0; i < 64; ++i) {
            const long e = std::clamp((static_cast<long>(base.divisors[i]) * sf + 50) / 100, 1L, 255L);
            ASSERT_EQ(t.divisors[i], static_cast<double>(e)) << "q=" << q << " i=" << i;
        }
    }
}

TEST(ScaleQuantTable, RejectsOutOfRangeQuality) {
    const auto base = base_table(TableRole::Luminance);
    EXPECT_THROW(scale_quant_table(base, 0, ScaleMode::Integer), pn::InvalidQuality);
    EXPECT_THROW(scale_quant_table(base, 101, ScaleMode::Continuous), pn::InvalidQuality);
    EXPECT_THROW(transcode_image(solid(8, 8, 1, 2, 3), 0), pn::InvalidQuality);
}

TEST(Dct, ConstantBlocks) {
    std::array<double, 64> b;
    b.fill(128);
    for (double c : forward_dct(b)) EXPECT_NEAR(c, 0.0, 1e-12);
    b.fill(255);
    const auto c = forward_dct(b);
    EXPECT_NEAR(c[0], 1016.0, 1e-9);
    for (int i = 1; i < 64; ++i) EXPECT_NEAR(c[i], 0.0, 1e-9);
}

TEST(Dct, InverseOfKnownCoefficients) {
    CoeffBlock c{};
    for (double v : inverse_dct(c)) EXPECT_NEAR(v, 128.0, 1e-12);
    c[0] = 1016;
    for (double v : inverse_dct(c)) EXPECT_NEAR(v, 255.0, 1e-9);
}

TEST(Dct, MatchesDirectDoubleSum) {
    // Oracle: the textbook 4-fold cosine sum.
    std::mt19937_64 rng(3);
    const auto x = random_block(rng);
    const auto c = forward_dct(x);
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            double s = 0;
            for (int y = 0; y < 8; ++y)
                for (int xx = 0; xx < 8; ++xx)
                    s += (x[y * 8 + xx] - 128) * std::cos((2 * xx + 1) * u * M_PI / 16) * std::cos((2 * y + 1) * v * M_PI / 16);
            const double cu = u == 0 ? 1 / std::sqrt(2.0) : 1, cv = v == 0 ? 1 / std::sqrt(2.0) : 1;
            EXPECT_NEAR(c[v * 8 + u], 0.25 * cu * cv * s, 1e-9);
        }
}

TEST(Dct, RoundTripAndParsevalOnRandomBlocks) {
    std::mt19937_64 rng(42);
    double worst = 0, worst_rel = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto x = random_block(rng);
        const auto c = forward_dct(x);
        const auto y = inverse_dct(c);
        double ex = 0, ec = 0;
        for (int i = 0; i < 64; ++i) {
            worst = std::max(worst, std::abs(x[i] - y[i]));
            ex += (x[i] - 128) * (x[i] - 128);
            ec += c[i] * c[i];
        }
        worst_rel = std::max(worst_rel, std::abs(ex - ec) / ex);
    }
    EXPECT_LE(worst, 1e-9);
    EXPECT_LE(worst_rel, 1e-9);
}

TEST(Quantize, WorkedExample) {
    CoeffBlock c{};
    c[5] = 100;
    QuantTable t{TableRole::Luminance, {}};
    t.divisors.fill(1);
    t.divisors[5] = 16;
    const auto q = quantize_block(c, t);
    EXPECT_EQ(q[5], 6);
    EXPECT_EQ(dequantize_block(q, t)[5], 96);
    EXPECT_EQ(q[0], 0);
}

TEST(Quantize, OnesTableRoundsAndZeroStaysZero) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-500, 500);
    QuantTable ones{TableRole::Luminance, {}};
    ones.divisors.fill(1);
    CoeffBlock c;
    for (double& v : c) v = u(rng);
    const auto q = quantize_block(c, ones);
    const auto d = dequantize_block(q, ones);
    for (int i = 0; i < 64; ++i) {
        EXPECT_EQ(q[i], std::lround(c[i]));
        EXPECT_EQ(d[i], static_cast<double>(std::lround(c[i])));
    }
    const CoeffBlock zero{};
    for (int quality : {1, 10, 50, 90, 100})
        for (int v : quantize_block(zero, scale_quant_table(base_table(TableRole::Luminance), quality, ScaleMode::Integer)))
            EXPECT_EQ(v, 0);
}

TEST(Quantize, ReconstructionErrorBoundedByHalfDivisor) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1024, 1024);
    for (int quality = 1; quality <= 100; quality += 3) {
        const auto t = scale_quant_table(base_table(TableRole::Chrominance), quality, ScaleMode::Integer);
        for (int rep = 0; rep < 20; ++rep) {
            CoeffBlock c;
            for (double& v : c) v = u(rng);
            const auto d = dequantize_block(quantize_block(c, t), t);
            for (int i = 0; i < 64; ++i) ASSERT_LE(std::abs(d[i] - c[i]), t.divisors[i] / 2 + 1e-12);
        }
    }
}

TEST(ColorConversion, AchromaticFixedPoints) {
    const auto white = rgb_to_yuv420(solid(8, 8, 255, 255, 255));
    for (auto v : white.y.samples) EXPECT_EQ(v, 255);
    for (auto v : white.u.samples) EXPECT_EQ(v, 128);
    for (auto v : white.v.samples) EXPECT_EQ(v, 128);
    const auto black = rgb_to_yuv420(solid(8, 8, 0, 0, 0));
    for (auto v : black.y.samples) EXPECT_EQ(v, 0);
    for (auto v : black.u.samples) EXPECT_EQ(v, 128);
    for (auto v : black.v.samples) EXPECT_EQ(v, 128);
}

TEST(ColorConversion, PureRed) {
    // Y = .299*255 = 76.2, Cb = 128 - .168736*255 = 85.0, Cr = 128 + .5*255 -> clamp 255
    const auto red = rgb_to_yuv420(solid(2, 2, 255, 0, 0));
    for (auto v : red.y.samples) EXPECT_EQ(v, 76);
    ASSERT_EQ(red.u.samples.size(), 1u);
    EXPECT_EQ(red.u.samples[0], 85);
    EXPECT_EQ(red.v.samples[0], 255);
}

TEST(ColorConversion, ChromaPlanesRoundUp) {
    const auto yuv = rgb_to_yuv420(solid(7, 5, 10, 20, 30));
    EXPECT_EQ(yuv.y.width, 7);
    EXPECT_EQ(yuv.y.height, 5);
    EXPECT_EQ(yuv.u.width, 4);
    EXPECT_EQ(yuv.u.height, 3);
    EXPECT_EQ(yuv.v.width, 4);
    EXPECT_EQ(yuv.v.height, 3);
}

TEST(ColorConversion, RejectsEmptyImage) {
    EXPECT_THROW(rgb_to_yuv420(ImageRGB(0, 4)), pn::InvalidInput);
    EXPECT_THROW(rgb_to_yuv420(ImageRGB(4, 0)), pn::InvalidInput);
}

TEST(ColorConversion, BlockConstantImagesRoundTripToRounding) {
    // Chroma constant over each 2x2 block survives subsampling, leaving only
    // the 8-bit rounding of Y, U, V (at most ~2 levels after the matrix).
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> u(30, 225);
    ImageRGB img(16, 16);
    for (int by = 0; by < 8; ++by)
        for (int bx = 0; bx < 8; ++bx) {
            const int r = u(rng), g = u(rng), b = u(rng);
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    img.at(2 * bx + dx, 2 * by + dy, 0) = r;
                    img.at(2 * bx + dx, 2 * by + dy, 1) = g;
                    img.at(2 * bx + dx, 2 * by + dy, 2) = b;
                }
        }
    const auto back = yuv420_to_rgb(rgb_to_yuv420(img));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) ASSERT_LE(std::abs(int(img.pixels[i]) - int(back.pixels[i])), 2) << i;
}

TEST(ColorConversion, SmoothImagesRoundTripWithHighPsnr) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto img = smooth_image(32, 32, seed);
        EXPECT_GE(psnr(img, yuv420_to_rgb(rgb_to_yuv420(img))), 40.0) << seed;
    }
}

TEST(Transcode, Q100IsHighFidelityOnSmoothImages) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto img = smooth_image(32, 32, seed);
        EXPECT_GE(transcode_image(img, 100).stats.psnr, 40.0) << "seed " << seed;
    }
}

TEST(Transcode, PsnrAndEntropyNonIncreasingAsQualityDrops) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto img = smooth_image(32, 32, seed, 12.0);
        double prev_psnr = INFINITY, prev_h = INFINITY;
        for (int q : {95, 75, 50, 25, 5}) {
            const auto s = transcode_image(img, q).stats;
            EXPECT_LE(s.psnr, prev_psnr) << "seed " << seed << " q " << q;
            EXPECT_LE(s.coefficient_entropy, prev_h) << "seed " << seed << " q " << q;
            EXPECT_GE(s.coefficient_entropy, 0.0);
            EXPECT_GE(s.nonzero_fraction, 0.0);
            EXPECT_LE(s.nonzero_fraction, 1.0);
            EXPECT_GT(s.psnr, 0.0);
            prev_psnr = s.psnr;
            prev_h = s.coefficient_entropy;
        }
    }
}

TEST(Transcode, MidGrayIsExactAtEveryQuality) {
    const auto img = solid(16, 16, 128, 128, 128);
    for (int q = 1; q <= 100; ++q) EXPECT_EQ(transcode_image(img, q).image, img) << "q " << q;
}

TEST(Transcode, ConstantGrayErrorBoundedByDcStep) {
    // A constant block only has DC = 8(v-128); its error is at most t_DC/16
    // gray levels plus one for the final rounding.
    for (int gray : {0, 37, 100, 200, 255})
        for (int q : {5, 25, 50, 75, 95, 100}) {
            const auto img = solid(16, 16, gray, gray, gray);
            const auto out = transcode_image(img, q).image;
            const double t_dc = scale_quant_table(base_table(TableRole::Luminance), q, ScaleMode::Integer).divisors[0];
            for (std::size_t i = 0; i < out.pixels.size(); ++i)
                ASSERT_LE(std::abs(int(out.pixels[i]) - gray), t_dc / 16 + 1) << "gray " << gray << " q " << q;
            if (q >= 50) {
                for (std::size_t i = 0; i < out.pixels.size(); ++i) ASSERT_LE(std::abs(int(out.pixels[i]) - gray), 1);
            }
        }
}

TEST(Transcode, OddSizesAreTotalAndDeterministic) {
    const auto img = smooth_image(13, 9, 7, 5.0);
    const auto a = transcode_image(img, 60);
    const auto b = transcode_image(img, 60);
    EXPECT_EQ(a.image.width, 13);
    EXPECT_EQ(a.image.height, 9);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.stats.coefficient_entropy, b.stats.coefficient_entropy);
}

TEST(Transcode, IdenticalImagesHaveInfinitePsnr) {
    const auto img = smooth_image(8, 8, 1);
    EXPECT_TRUE(std::isinf(psnr(img, img)));
}

TEST(RawRgb, RoundTrip) {
    const auto img = smooth_image(5, 3, 9, 20.0);
    const auto path = std::filesystem::temp_directory_path() / "pn_test_raw.rgb";
    write_raw_rgb(path, img);
    EXPECT_EQ(read_raw_rgb(path), img);
    std::filesystem::remove(path);
}
