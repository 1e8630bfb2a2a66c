#include "l0robust/imageio.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <png.h>

#include <random>

using namespace l0robust;
using l0test::max_abs_diff;

namespace {

void write_rgb_png(const std::string &path, std::size_t rows, std::size_t cols, const std::vector<std::uint8_t> &rgb) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(cols);
    image.height = static_cast<png_uint_32>(rows);
    image.format = PNG_FORMAT_RGB;
    ASSERT_NE(png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr), 0);
}

std::vector<std::uint8_t> random_raster(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(0, 255);
    std::vector<std::uint8_t> r(n);
    for (auto &b : r) {
        b = static_cast<std::uint8_t>(d(rng));
    }
    return r;
}

}  // namespace

TEST(Pgm, MaxvalByteIsOne) {
    l0test::TempDir dir("pgm");
    l0test::write_bytes(dir.file("a.pgm"), l0test::pgm_bytes(1, 2, {255, 0}));
    const ImageBuffer img = load_image(dir.file("a.pgm"));
    EXPECT_EQ(img.rows, 1u);
    EXPECT_EQ(img.cols, 2u);
    EXPECT_EQ(img.pixels, (std::vector<double>{1.0, 0.0}));
}

TEST(Pgm, ZeroImageBytes) {
    l0test::TempDir dir("pgm");
    save_image(ImageBuffer{2, 2, Signal(4, 0.0)}, dir.file("z.pgm"));
    EXPECT_EQ(l0test::read_bytes(dir.file("z.pgm")), std::string("P5\n2 2\n255\n") + std::string(4, '\0'));
}

TEST(Pgm, RoundHalfUp) {
    EXPECT_EQ(quantize8(0.5), 128);
    EXPECT_EQ(quantize8(-0.1), 0);
    EXPECT_EQ(quantize8(1.7), 255);
    EXPECT_EQ(quantize8(std::nan("")), 0);
    EXPECT_EQ(quantize8(1.0 / 255.0), 1);
    l0test::TempDir dir("pgm");
    const SaveResult r = save_image(ImageBuffer{1, 3, {0.5, -1.0, 2.0}}, dir.file("h.pgm"));
    EXPECT_EQ(r.clamped, 2u);
    EXPECT_EQ(l0test::read_bytes(dir.file("h.pgm")), std::string("P5\n3 1\n255\n\x80\x00\xff", 14));
}

TEST(Pgm, SaveLoadQuantizationBound) {
    l0test::TempDir dir("pgm");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer img{7, 9, Signal(63)};
    for (double &v : img.pixels) {
        v = u(rng);
    }
    save_image(img, dir.file("r.pgm"));
    EXPECT_LE(max_abs_diff(load_image(dir.file("r.pgm")).pixels, img.pixels), 0.5 / 255.0 + 1e-15);
}

TEST(Pgm, ByteExactRoundTripCorpus) {
    l0test::TempDir dir("pgm");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t rows = 1 + seed % 7;
        const std::size_t cols = 1 + (seed * 5) % 11;
        const std::string bytes = l0test::pgm_bytes(rows, cols, random_raster(rows * cols, seed));
        l0test::write_bytes(dir.file("in.pgm"), bytes);
        save_image(load_image(dir.file("in.pgm")), dir.file("out.pgm"));
        EXPECT_EQ(l0test::read_bytes(dir.file("out.pgm")), bytes) << "seed " << seed;
    }
}

TEST(Pgm, HeaderVariants) {
    l0test::TempDir dir("pgm");
    l0test::write_bytes(dir.file("c.pgm"), std::string("P5\n# comment\n2 1\n# another\n255\n\x10\x20", 34));
    const ImageBuffer img = load_image(dir.file("c.pgm"));
    EXPECT_EQ(img.cols, 2u);
    EXPECT_NEAR(img.pixels[1], 32.0 / 255.0, 1e-15);
    // 16-bit big-endian samples.
    l0test::write_bytes(dir.file("w.pgm"), std::string("P5\n1 1\n65535\n\xff\xff", 15));
    EXPECT_EQ(load_image(dir.file("w.pgm")).pixels[0], 1.0);
}

TEST(Pgm, Errors) {
    l0test::TempDir dir("pgm");
    EXPECT_THROW((void)load_image(dir.file("missing.pgm")), io_error);
    l0test::write_bytes(dir.file("p2.pgm"), "P2\n1 1\n255\n0\n");
    EXPECT_THROW((void)load_image(dir.file("p2.pgm")), io_error);
    l0test::write_bytes(dir.file("short.pgm"), "P5\n4 4\n255\nab");
    EXPECT_THROW((void)load_image(dir.file("short.pgm")), io_error);
    EXPECT_THROW(save_image(ImageBuffer{1, 1, {0.0}}, dir.file("no/such/dir/x.pgm")), io_error);
    EXPECT_THROW(save_image(ImageBuffer{1, 1, {0.0}}, dir.file("x.bmp")), invalid_input);
}

TEST(Png, RgbCollapsesToLuma) {
    l0test::TempDir dir("png");
    write_rgb_png(dir.file("c.png"), 1, 1, {10, 20, 30});
    const ImageBuffer img = load_image(dir.file("c.png"));
    EXPECT_NEAR(img.pixels[0], 0.299 * 10 / 255 + 0.587 * 20 / 255 + 0.114 * 30 / 255, 1e-12);
}

TEST(Png, GrayRoundTrip) {
    l0test::TempDir dir("png");
    ImageBuffer img{5, 6, Signal(30)};
    const auto raster = random_raster(30, 4);
    for (std::size_t i = 0; i < 30; ++i) {
        img.pixels[i] = raster[i] / 255.0;
    }
    save_image(img, dir.file("g.png"));
    EXPECT_EQ(load_image(dir.file("g.png")).pixels, img.pixels);
    // Same raster as PGM and PNG loads identically.
    save_image(img, dir.file("g.pgm"));
    EXPECT_EQ(load_image(dir.file("g.pgm")).pixels, load_image(dir.file("g.png")).pixels);
}

TEST(Png, CorruptFileRejected) {
    l0test::TempDir dir("png");
    l0test::write_bytes(dir.file("bad.png"), std::string("\x89PNG\r\n\x1a\n", 8) + "garbage");
    EXPECT_THROW((void)load_image(dir.file("bad.png")), io_error);
}

TEST(Blockwise, FullBudgetIsIdentity) {
    ImageBuffer img{16, 16, l0test::synthetic_digit(16, 16, 2)};
    EXPECT_LT(max_abs_diff(blockwise_compress(img, 8, 64).pixels, img.pixels), 1e-12);
}

TEST(Blockwise, PiecewiseConstantIsUnchanged) {
    ImageBuffer img{16, 24, Signal(16 * 24)};
    for (std::size_t r = 0; r < 16; ++r) {
        for (std::size_t c = 0; c < 24; ++c) {
            img.at(r, c) = 0.1 * static_cast<double>((r / 8) * 3 + c / 8);
        }
    }
    EXPECT_LT(max_abs_diff(blockwise_compress(img, 8, 1).pixels, img.pixels), 1e-12);
}

TEST(Blockwise, SingleBlockMatchesWholeImageCompress) {
    ImageBuffer img{28, 28, l0test::synthetic_digit(28, 28, 3)};
    const Signal whole = compress(img.pixels, TransformKind::two_d(Family::DCT2, 28, 28), 40);
    EXPECT_LT(max_abs_diff(blockwise_compress(img, 28, 40).pixels, whole), 1e-12);
}

TEST(Blockwise, IdempotentAndTailEnergy) {
    ImageBuffer img{16, 16, l0test::synthetic_digit(16, 16, 4)};
    const ImageBuffer once = blockwise_compress(img, 8, 5);
    EXPECT_LT(max_abs_diff(blockwise_compress(once, 8, 5).pixels, once.pixels), 1e-12);
    const Transform t(TransformKind::two_d(Family::DCT2, 8, 8));
    for (std::size_t br = 0; br < 2; ++br) {
        for (std::size_t bc = 0; bc < 2; ++bc) {
            Signal block(64);
            Signal diff(64);
            for (std::size_t r = 0; r < 8; ++r) {
                for (std::size_t c = 0; c < 8; ++c) {
                    block[r * 8 + c] = img.at(br * 8 + r, bc * 8 + c);
                    diff[r * 8 + c] = block[r * 8 + c] - once.at(br * 8 + r, bc * 8 + c);
                }
            }
            EXPECT_NEAR(l2_norm(diff), l2_norm(tail(t.forward(block).values, 5)), 1e-9);
        }
    }
}

TEST(Blockwise, PaddedShapes) {
    ImageBuffer img{10, 13, l0test::synthetic_digit(10, 13, 5)};
    const ImageBuffer out = blockwise_compress(img, 8, 64);
    EXPECT_EQ(out.rows, 10u);
    EXPECT_EQ(out.cols, 13u);
    EXPECT_LT(max_abs_diff(out.pixels, img.pixels), 1e-12);
    EXPECT_THROW((void)blockwise_compress(img, 0, 1), invalid_input);
    EXPECT_THROW((void)blockwise_compress(img, 4, 17), invalid_input);
}

TEST(Blockwise, ThreadCountDoesNotMatter) {
    ImageBuffer img{32, 32, l0test::synthetic_digit(32, 32, 6)};
    EXPECT_EQ(blockwise_compress(img, 8, 6, 1).pixels, blockwise_compress(img, 8, 6, 4).pixels);
}
