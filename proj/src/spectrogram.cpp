#include "breathsense/spectrogram.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "breathsense/error.hpp"
#include "breathsense/features.hpp"

namespace breathsense {

std::size_t spectrogram_column(double t_seconds) noexcept {
    const double hop = static_cast<double>(kMelStft.hop_length);
    return static_cast<std::size_t>(std::llround(std::max(0.0, t_seconds) * kCanonicalRate / hop));
}

GrayImage render_spectrogram(const AudioClip& clip, const LabelTrack* labels) {
    if (!clip.is_canonical()) throw Error(ErrorCode::InvalidArgument, "spectrogram needs a 16 kHz mono clip");
    const FeatureMatrix m = default_mel_extractor().compute(clip.samples);
    GrayImage img{m.cols, m.rows, std::vector<std::uint8_t>(m.rows * m.cols, 0)};
    const auto [lo_it, hi_it] = std::minmax_element(m.values.begin(), m.values.end());
    const double lo = *lo_it, range = static_cast<double>(*hi_it) - lo;
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) {
            const double v = range > 0.0 ? (m.at(r, c) - lo) / range : 0.0;
            img.pixels[(m.rows - 1 - r) * m.cols + c] = static_cast<std::uint8_t>(std::lround(255.0 * v));
        }
    if (labels) {
        for (const auto& iv : labels->intervals)
            for (double t : {iv.start_s, iv.end_s}) {
                const std::size_t col = std::min(spectrogram_column(t), img.width - 1);
                for (std::size_t y = 0; y < img.height; ++y) img.pixels[y * img.width + col] = 255;
            }
    }
    return img;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

[[noreturn]] void png_fail(png_structp, png_const_charp msg) {
    throw Error(ErrorCode::IoError, std::string("png: ") + msg);
}

}  // namespace

void write_png(const std::string& path, const GrayImage& image) {
    if (image.width == 0 || image.height == 0) throw Error(ErrorCode::InvalidArgument, "empty image");
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, nullptr);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, f.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (std::size_t y = 0; y < image.height; ++y)
            png_write_row(png, image.pixels.data() + y * image.width);
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

GrayImage read_png(const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, nullptr);
    png_infop info = png_create_info_struct(png);
    GrayImage img;
    try {
        png_init_io(png, f.get());
        png_read_info(png, info);
        if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8)
            throw Error(ErrorCode::UnsupportedEncoding, path + " is not an 8-bit grayscale PNG");
        img.width = png_get_image_width(png, info);
        img.height = png_get_image_height(png, info);
        img.pixels.resize(img.width * img.height);
        for (std::size_t y = 0; y < img.height; ++y) png_read_row(png, img.pixels.data() + y * img.width, nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace breathsense
