#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "breathsense/audio_io.hpp"
#include "breathsense/labels.hpp"

namespace breathsense {

/// 8-bit grayscale raster, row-major, row 0 at the top.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Log-mel spectrogram of a whole canonical clip (128 bands, hop 64): one
/// column per STFT frame, highest band on top, linearly scaled min..max to
/// 0..255 (a constant spectrogram renders as 0). Label interval edges are
/// drawn as full-height 255 columns.
GrayImage render_spectrogram(const AudioClip& clip, const LabelTrack* labels = nullptr);

/// Column of the frame whose center is nearest to time t.
std::size_t spectrogram_column(double t_seconds) noexcept;

void write_png(const std::string& path, const GrayImage& image);
GrayImage read_png(const std::string& path);  // grayscale 8-bit only

}  // namespace breathsense
