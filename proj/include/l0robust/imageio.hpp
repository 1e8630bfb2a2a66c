#pragma once

// Grayscale image I/O (binary PGM and PNG) and block-wise top-k DCT compression.

#include "l0robust/core.hpp"
#include "l0robust/recovery.hpp"
#include "l0robust/transforms.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace l0robust {

/// rows x cols grid of reals in [0, 1], row-major.
struct ImageBuffer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;
    std::string provenance = "synthetic";

    [[nodiscard]] std::size_t size() const { return rows * cols; }
    double &at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
};

enum class ImageFormat { Pgm, Png };

inline ImageFormat format_from_path(const std::filesystem::path &path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") {
        return ImageFormat::Png;
    }
    if (ext == ".pgm" || ext == ".pnm") {
        return ImageFormat::Pgm;
    }
    throw invalid_input("cannot infer image format from '" + path.string() + "' (expected .pgm or .png)");
}

struct SaveResult {
    /// Pixels that were outside [0, 1] and got clamped.
    std::size_t clamped = 0;
};

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// 8-bit quantization used by every writer: round half up, after clamping to [0, 1].
inline std::uint8_t quantize8(double v) {
    const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

namespace detail {

inline ImageBuffer read_pgm(std::istream &in, const std::string &source) {
    const auto fail = [&](const std::string &what) { return io_error("PGM '" + source + "': " + what); };
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') {
        throw fail("not a binary (P5) PGM");
    }
    const auto next_number = [&]() -> unsigned long {
        int ch = in.get();
        while (ch != EOF) {
            if (ch == '#') {
                while (ch != EOF && ch != '\n') {
                    ch = in.get();
                }
            } else if (std::isspace(ch)) {
                ch = in.get();
            } else {
                break;
            }
        }
        if (ch == EOF || !std::isdigit(ch)) {
            throw fail("malformed header");
        }
        unsigned long value = 0;
        while (ch != EOF && std::isdigit(ch)) {
            value = value * 10 + static_cast<unsigned long>(ch - '0');
            if (value > 1000000000UL) {
                throw fail("header value out of range");
            }
            ch = in.get();
        }
        if (ch == EOF || !std::isspace(ch)) {
            throw fail("malformed header");
        }
        return value;
    };
    const unsigned long width = next_number();
    const unsigned long height = next_number();
    const unsigned long maxval = next_number();  // consumes the single whitespace before the raster
    if (width == 0 || height == 0) {
        throw fail("dimensions must be positive");
    }
    if (maxval == 0 || maxval > 65535) {
        throw fail("maxval must be in [1, 65535]");
    }
    ImageBuffer img;
    img.rows = height;
    img.cols = width;
    img.provenance = source;
    img.pixels.resize(img.rows * img.cols);
    const std::size_t bytes_per = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raster(img.pixels.size() * bytes_per);
    in.read(reinterpret_cast<char *>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (static_cast<std::size_t>(in.gcount()) != raster.size()) {
        throw fail("truncated raster");
    }
    const double maxv = static_cast<double>(maxval);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const unsigned v = bytes_per == 1 ? raster[i] : (unsigned{raster[2 * i]} << 8) | raster[2 * i + 1];
        img.pixels[i] = std::clamp(static_cast<double>(v) / maxv, 0.0, 1.0);
    }
    return img;
}

struct PngReadState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadState() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteState() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct FileCloser {
    void operator()(std::FILE *f) const { std::fclose(f); }
};

inline ImageBuffer read_png(const std::filesystem::path &path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
    if (!file) {
        throw io_error("cannot open '" + path.string() + "'");
    }
    PngReadState st;
    st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!st.png) {
        throw io_error("libpng: cannot create read struct");
    }
    st.info = png_create_info_struct(st.png);
    if (!st.info) {
        throw io_error("libpng: cannot create info struct");
    }
    ImageBuffer img;
    std::vector<png_byte> data;
    std::vector<png_bytep> row_ptrs;
    bool ok = false;
    if (setjmp(png_jmpbuf(st.png)) == 0) {
        png_init_io(st.png, file.get());
        png_read_info(st.png, st.info);
        const png_uint_32 width = png_get_image_width(st.png, st.info);
        const png_uint_32 height = png_get_image_height(st.png, st.info);
        const int color = png_get_color_type(st.png, st.info);
        const int depth = png_get_bit_depth(st.png, st.info);
        if (color == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(st.png);
        }
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
            png_set_expand_gray_1_2_4_to_8(st.png);
        }
        if (png_get_valid(st.png, st.info, PNG_INFO_tRNS)) {
            png_set_tRNS_to_alpha(st.png);
        }
        png_set_strip_alpha(st.png);
        png_read_update_info(st.png, st.info);
        const int channels = png_get_channels(st.png, st.info);
        const int out_depth = png_get_bit_depth(st.png, st.info);
        const std::size_t rowbytes = png_get_rowbytes(st.png, st.info);
        data.resize(rowbytes * height);
        row_ptrs.resize(height);
        for (png_uint_32 r = 0; r < height; ++r) {
            row_ptrs[r] = data.data() + r * rowbytes;
        }
        png_read_image(st.png, row_ptrs.data());
        png_read_end(st.png, nullptr);

        img.rows = height;
        img.cols = width;
        img.provenance = path.string();
        img.pixels.resize(img.size());
        const double maxv = out_depth == 16 ? 65535.0 : 255.0;
        const std::size_t bytes = out_depth == 16 ? 2 : 1;
        for (png_uint_32 r = 0; r < height; ++r) {
            const png_bytep row = row_ptrs[r];
            for (png_uint_32 c = 0; c < width; ++c) {
                const auto sample = [&](int ch) {
                    const std::size_t off = (static_cast<std::size_t>(c) * static_cast<std::size_t>(channels) +
                                             static_cast<std::size_t>(ch)) * bytes;
                    const unsigned v = bytes == 1 ? row[off] : (unsigned{row[off]} << 8) | row[off + 1];
                    return static_cast<double>(v) / maxv;
                };
                double v = 0.0;
                if (channels >= 3) {
                    v = kLumaR * sample(0) + kLumaG * sample(1) + kLumaB * sample(2);
                } else {
                    v = sample(0);
                }
                img.pixels[static_cast<std::size_t>(r) * width + c] = std::clamp(v, 0.0, 1.0);
            }
        }
        ok = true;
    }
    if (!ok) {
        throw io_error("'" + path.string() + "' is not a readable PNG");
    }
    return img;
}

inline void write_png(const ImageBuffer &img, const std::filesystem::path &path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
    if (!file) {
        throw io_error("cannot write '" + path.string() + "'");
    }
    PngWriteState st;
    st.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!st.png) {
        throw io_error("libpng: cannot create write struct");
    }
    st.info = png_create_info_struct(st.png);
    if (!st.info) {
        throw io_error("libpng: cannot create info struct");
    }
    std::vector<png_byte> data(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        data[i] = quantize8(img.pixels[i]);
    }
    std::vector<png_bytep> rows(img.rows);
    for (std::size_t r = 0; r < img.rows; ++r) {
        rows[r] = data.data() + r * img.cols;
    }
    bool ok = false;
    if (setjmp(png_jmpbuf(st.png)) == 0) {
        png_init_io(st.png, file.get());
        png_set_IHDR(st.png, st.info, static_cast<png_uint_32>(img.cols), static_cast<png_uint_32>(img.rows), 8,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(st.png, st.info);
        png_write_image(st.png, rows.data());
        png_write_end(st.png, nullptr);
        ok = true;
    }
    if (!ok) {
        throw io_error("libpng failed writing '" + path.string() + "'");
    }
}

}  // namespace detail

/// Loads a binary PGM (8 or 16 bit) or a PNG (gray, gray+alpha, RGB, RGBA, palette).
/// Colour is collapsed with luma weights 0.299 / 0.587 / 0.114; values land in [0, 1].
inline ImageBuffer load_image(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open '" + path.string() + "'");
    }
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char *>(sig), 8);
    const auto got = in.gcount();
    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) {
        in.close();
        return detail::read_png(path);
    }
    if (got >= 2 && sig[0] == 'P' && sig[1] == '5') {
        in.clear();
        in.seekg(0);
        return detail::read_pgm(in, path.string());
    }
    throw io_error("'" + path.string() + "': unsupported image format (expected P5 PGM or PNG)");
}

/// PGM output is P5, maxval 255, header "P5\n<cols> <rows>\n255\n", round half up.
inline SaveResult save_image(const ImageBuffer &img, const std::filesystem::path &path, ImageFormat format) {
    if (img.rows == 0 || img.cols == 0 || img.pixels.size() != img.size()) {
        throw invalid_input("save_image: malformed image buffer");
    }
    SaveResult result;
    for (double v : img.pixels) {
        if (!(v >= 0.0 && v <= 1.0)) {
            ++result.clamped;
        }
    }
    if (format == ImageFormat::Png) {
        detail::write_png(img, path);
        return result;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot write '" + path.string() + "'");
    }
    out << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
    std::vector<char> raster(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        raster[i] = static_cast<char>(quantize8(img.pixels[i]));
    }
    out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
    if (!out) {
        throw io_error("failed writing '" + path.string() + "'");
    }
    return result;
}

inline SaveResult save_image(const ImageBuffer &img, const std::filesystem::path &path) {
    return save_image(img, path, format_from_path(path));
}

/// Each block_side x block_side block replaced by its top-k 2D DCT-II projection. Images whose
/// sides are not multiples of block_side are padded by edge replication and cropped back
/// (idempotent only when block_side divides both sides).
inline ImageBuffer blockwise_compress(const ImageBuffer &img, std::size_t block_side, std::size_t k_per_block,
                                      std::size_t threads = 1) {
    if (block_side == 0 || k_per_block == 0) {
        throw invalid_input("blockwise_compress: block side and k must be positive");
    }
    if (k_per_block > block_side * block_side) {
        throw invalid_input("blockwise_compress: k exceeds block size");
    }
    if (img.rows == 0 || img.cols == 0 || img.pixels.size() != img.size()) {
        throw invalid_input("blockwise_compress: malformed image buffer");
    }
    const std::size_t brows = (img.rows + block_side - 1) / block_side;
    const std::size_t bcols = (img.cols + block_side - 1) / block_side;
    const Transform transform(TransformKind::two_d(Family::DCT2, block_side, block_side));
    ImageBuffer out = img;
    parallel_for(brows * bcols, threads, [&](std::size_t b) {
        const std::size_t r0 = (b / bcols) * block_side;
        const std::size_t c0 = (b % bcols) * block_side;
        Signal block(block_side * block_side);
        for (std::size_t r = 0; r < block_side; ++r) {
            for (std::size_t c = 0; c < block_side; ++c) {
                const std::size_t rr = std::min(r0 + r, img.rows - 1);
                const std::size_t cc = std::min(c0 + c, img.cols - 1);
                block[r * block_side + c] = img.at(rr, cc);
            }
        }
        const Signal compressed = compress(block, transform, k_per_block);
        for (std::size_t r = 0; r < block_side && r0 + r < img.rows; ++r) {
            for (std::size_t c = 0; c < block_side && c0 + c < img.cols; ++c) {
                out.at(r0 + r, c0 + c) = compressed[r * block_side + c];
            }
        }
    });
    return out;
}

}  // namespace l0robust
