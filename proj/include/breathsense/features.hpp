#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "breathsense/fft.hpp"

namespace breathsense {

enum class FeatureKind : std::uint8_t { Mel = 0, Mfcc = 1 };

std::string_view feature_kind_name(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view name);

/// Rows are the frequency (or cepstral) axis, columns are time frames.
struct FeatureMatrix {
    FeatureKind kind = FeatureKind::Mel;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;

    float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    float& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }

    bool operator==(const FeatureMatrix&) const = default;
};

struct StftConfig {
    std::size_t n_fft = 2048;
    std::size_t win_length = 2048;
    std::size_t hop_length = 64;
    bool center = true;  // reflect padding by n_fft / 2 on both sides
};

inline constexpr StftConfig kMelStft{2048, 2048, 64, true};
inline constexpr StftConfig kMfccStft{400, 400, 200, true};

/// bins x frames, row-major.
struct Spectrum {
    std::size_t bins = 0;
    std::size_t frames = 0;
    std::vector<std::complex<double>> values;

    const std::complex<double>& at(std::size_t bin, std::size_t frame) const { return values[bin * frames + frame]; }
};

/// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

std::size_t stft_frame_count(std::size_t num_samples, const StftConfig& cfg);

/// Periodic Hann window of win_length, zero-padded symmetrically to n_fft.
std::vector<double> hann_window(const StftConfig& cfg);

Spectrum stft(std::span<const float> samples, const StftConfig& cfg);

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

/// Triangular HTK-scale filters spanning 0 Hz .. sample_rate / 2, no area
/// normalization. n_mels x (n_fft / 2 + 1).
Matrix mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate);

/// Center frequencies (Hz) of the filters built by mel_filterbank.
std::vector<double> mel_center_frequencies(std::size_t n_mels, int sample_rate);

/// Orthonormal DCT-II basis, n_out x n_in.
Matrix dct_matrix(std::size_t n_out, std::size_t n_in);

inline constexpr double kLogFloor = 1e-6;

struct MelOptions {
    bool log_compress = true;  // ln(x + 1e-6); false returns raw power
};

/// Mel spectrogram extractor with precomputed window, FFT plan and
/// filterbank. All methods are const and safe to share across threads.
class MelExtractor {
public:
    MelExtractor(StftConfig stft_cfg, std::size_t n_mels, int sample_rate);

    const StftConfig& stft_config() const noexcept { return cfg_; }
    const Matrix& filterbank() const noexcept { return filterbank_; }
    std::size_t n_mels() const noexcept { return filterbank_.rows; }

    /// n_mels x frames; pre-log values are mel-weighted |STFT|^2.
    FeatureMatrix compute(std::span<const float> samples, MelOptions options = {}) const;

private:
    StftConfig cfg_;
    std::vector<double> window_;
    FftPlan plan_;
    Matrix filterbank_;
    std::vector<std::pair<std::size_t, std::size_t>> support_;  // nonzero bin range per filter
};

class MfccExtractor {
public:
    MfccExtractor(StftConfig stft_cfg, std::size_t n_mels, std::size_t n_mfcc, int sample_rate);

    const MelExtractor& mel() const noexcept { return mel_; }
    const Matrix& dct() const noexcept { return dct_; }

    FeatureMatrix compute(std::span<const float> samples) const;

private:
    MelExtractor mel_;
    Matrix dct_;
};

inline constexpr std::size_t kMelBands = 128;
inline constexpr std::size_t kMfccMelBands = 128;
inline constexpr std::size_t kMfccCoefficients = 40;

const MelExtractor& default_mel_extractor();
const MfccExtractor& default_mfcc_extractor();

/// 128 x 126 log-mel spectrogram of an 8000-sample segment.
FeatureMatrix mel_spectrogram(std::span<const float> segment, MelOptions options = {});

/// 40 x 41 MFCC matrix of an 8000-sample segment.
FeatureMatrix mfcc(std::span<const float> segment);

/// Subtract the mean, divide by (std + 1e-8).
void standardize(FeatureMatrix& m);

/// Extract the requested kind and standardize: the network input.
FeatureMatrix model_input(std::span<const float> segment, FeatureKind kind);

std::pair<std::size_t, std::size_t> feature_shape(FeatureKind kind) noexcept;

/// BFM1 container: "BFM1", kind byte, u32 rows, u32 cols, f32 LE payload.
std::vector<std::uint8_t> encode_feature_dump(const FeatureMatrix& m);
FeatureMatrix decode_feature_dump(std::span<const std::uint8_t> bytes);

}  // namespace breathsense
