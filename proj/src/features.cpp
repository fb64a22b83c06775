#include "breathsense/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "breathsense/audio_io.hpp"
#include "breathsense/byte_io.hpp"
#include "breathsense/error.hpp"
#include "breathsense/labels.hpp"

namespace breathsense {

std::string_view feature_kind_name(FeatureKind kind) noexcept {
    return kind == FeatureKind::Mel ? "mel" : "mfcc";
}

FeatureKind parse_feature_kind(std::string_view name) {
    if (name == "mel") return FeatureKind::Mel;
    if (name == "mfcc") return FeatureKind::Mfcc;
    throw Error(ErrorCode::InvalidArgument, "feature kind must be mel or mfcc, got '" + std::string(name) + "'");
}

std::size_t stft_frame_count(std::size_t num_samples, const StftConfig& cfg) {
    if (cfg.center) return num_samples / cfg.hop_length + 1;
    if (num_samples < cfg.n_fft) return 0;
    return (num_samples - cfg.n_fft) / cfg.hop_length + 1;
}

std::vector<double> hann_window(const StftConfig& cfg) {
    std::vector<double> w(cfg.n_fft, 0.0);
    const std::size_t offset = (cfg.n_fft - cfg.win_length) / 2;
    for (std::size_t i = 0; i < cfg.win_length; ++i)
        w[offset + i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(cfg.win_length));
    return w;
}

namespace {

void validate(const StftConfig& cfg) {
    if (cfg.n_fft == 0 || cfg.win_length == 0 || cfg.win_length > cfg.n_fft || cfg.hop_length == 0)
        throw Error(ErrorCode::InvalidArgument, "invalid STFT configuration");
}

// Reflect-pad index mapping (edge sample not repeated).
std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t len) {
    if (i < 0) i = -i;
    if (i >= len) i = 2 * (len - 1) - i;
    return static_cast<std::size_t>(i);
}

template <typename Sink>
void for_each_frame(std::span<const float> samples, const StftConfig& cfg, const std::vector<double>& window,
                    const FftPlan& plan, Sink&& sink) {
    if (samples.empty()) throw Error(ErrorCode::EmptyInput, "STFT of an empty signal");
    const auto len = static_cast<std::ptrdiff_t>(samples.size());
    const auto pad = cfg.center ? static_cast<std::ptrdiff_t>(cfg.n_fft / 2) : 0;
    if (cfg.center && pad >= len) throw Error(ErrorCode::InvalidArgument, "signal too short for reflect padding");
    const std::size_t frames = stft_frame_count(samples.size(), cfg);
    if (frames == 0) throw Error(ErrorCode::InvalidArgument, "signal shorter than one frame");

    std::vector<std::complex<double>> buf(cfg.n_fft);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(f * cfg.hop_length) - pad;
        for (std::size_t i = 0; i < cfg.n_fft; ++i) {
            const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
            const double x = (idx >= 0 && idx < len) ? samples[static_cast<std::size_t>(idx)] : samples[reflect(idx, len)];
            buf[i] = {x * window[i], 0.0};
        }
        plan.forward(buf);
        sink(f, frames, std::span<const std::complex<double>>(buf.data(), cfg.n_fft / 2 + 1));
    }
}

}  // namespace

Spectrum stft(std::span<const float> samples, const StftConfig& cfg) {
    validate(cfg);
    const FftPlan plan(cfg.n_fft);
    const auto window = hann_window(cfg);
    Spectrum out;
    out.bins = cfg.n_fft / 2 + 1;
    for_each_frame(samples, cfg, window, plan,
                   [&](std::size_t f, std::size_t frames, std::span<const std::complex<double>> col) {
                       if (out.values.empty()) {
                           out.frames = frames;
                           out.values.resize(out.bins * frames);
                       }
                       for (std::size_t k = 0; k < out.bins; ++k) out.values[k * frames + f] = col[k];
                   });
    return out;
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_points(std::size_t n_mels, int sample_rate) {
    const double mel_min = hz_to_mel(0.0);
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    std::vector<double> hz(n_mels + 2);
    for (std::size_t i = 0; i < hz.size(); ++i)
        hz[i] = mel_to_hz(mel_min + (mel_max - mel_min) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    return hz;
}

}  // namespace

std::vector<double> mel_center_frequencies(std::size_t n_mels, int sample_rate) {
    auto pts = mel_points(n_mels, sample_rate);
    return {pts.begin() + 1, pts.end() - 1};
}

Matrix mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate) {
    if (n_mels == 0 || n_fft == 0 || n_fft % 2 != 0) throw Error(ErrorCode::InvalidArgument, "n_mels >= 1 and even n_fft required");
    const std::size_t bins = n_fft / 2 + 1;
    const auto pts = mel_points(n_mels, sample_rate);
    Matrix fb{n_mels, bins, std::vector<double>(n_mels * bins, 0.0)};
    for (std::size_t k = 0; k < bins; ++k) {
        const double f = (sample_rate / 2.0) * static_cast<double>(k) / static_cast<double>(bins - 1);
        for (std::size_t m = 0; m < n_mels; ++m) {
            const double down = (f - pts[m]) / (pts[m + 1] - pts[m]);
            const double up = (pts[m + 2] - f) / (pts[m + 2] - pts[m + 1]);
            fb.values[m * bins + k] = std::max(0.0, std::min(down, up));
        }
    }
    return fb;
}

Matrix dct_matrix(std::size_t n_out, std::size_t n_in) {
    Matrix d{n_out, n_in, std::vector<double>(n_out * n_in)};
    const double n = static_cast<double>(n_in);
    for (std::size_t k = 0; k < n_out; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (std::size_t i = 0; i < n_in; ++i)
            d.values[k * n_in + i] =
                scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
    }
    return d;
}

MelExtractor::MelExtractor(StftConfig stft_cfg, std::size_t n_mels, int sample_rate)
    : cfg_(stft_cfg), window_((validate(stft_cfg), hann_window(stft_cfg))), plan_(stft_cfg.n_fft),
      filterbank_(mel_filterbank(n_mels, stft_cfg.n_fft, sample_rate)) {
    support_.reserve(n_mels);
    for (std::size_t m = 0; m < n_mels; ++m) {
        std::size_t lo = filterbank_.cols, hi = 0;
        for (std::size_t k = 0; k < filterbank_.cols; ++k) {
            if (filterbank_.at(m, k) > 0.0) {
                lo = std::min(lo, k);
                hi = k + 1;
            }
        }
        if (lo >= hi) lo = hi = 0;
        support_.emplace_back(lo, hi);
    }
}

FeatureMatrix MelExtractor::compute(std::span<const float> samples, MelOptions options) const {
    FeatureMatrix out;
    out.kind = FeatureKind::Mel;
    out.rows = filterbank_.rows;
    std::vector<double> power(filterbank_.cols);
    for_each_frame(samples, cfg_, window_, plan_,
                   [&](std::size_t f, std::size_t frames, std::span<const std::complex<double>> col) {
                       if (out.values.empty()) {
                           out.cols = frames;
                           out.values.resize(out.rows * frames);
                       }
                       for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(col[k]);
                       for (std::size_t m = 0; m < out.rows; ++m) {
                           const auto [lo, hi] = support_[m];
                           double acc = 0.0;
                           const double* w = filterbank_.values.data() + m * filterbank_.cols;
                           for (std::size_t k = lo; k < hi; ++k) acc += w[k] * power[k];
                           out.values[m * frames + f] =
                               static_cast<float>(options.log_compress ? std::log(acc + kLogFloor) : acc);
                       }
                   });
    return out;
}

MfccExtractor::MfccExtractor(StftConfig stft_cfg, std::size_t n_mels, std::size_t n_mfcc, int sample_rate)
    : mel_(stft_cfg, n_mels, sample_rate), dct_(dct_matrix(n_mfcc, n_mels)) {
    if (n_mfcc > n_mels) throw Error(ErrorCode::InvalidArgument, "n_mfcc must not exceed n_mels");
}

FeatureMatrix MfccExtractor::compute(std::span<const float> samples) const {
    const FeatureMatrix logmel = mel_.compute(samples, {.log_compress = true});
    FeatureMatrix out;
    out.kind = FeatureKind::Mfcc;
    out.rows = dct_.rows;
    out.cols = logmel.cols;
    out.values.resize(out.rows * out.cols);
    for (std::size_t k = 0; k < out.rows; ++k) {
        for (std::size_t t = 0; t < out.cols; ++t) {
            double acc = 0.0;
            for (std::size_t m = 0; m < dct_.cols; ++m) acc += dct_.at(k, m) * logmel.at(m, t);
            out.at(k, t) = static_cast<float>(acc);
        }
    }
    return out;
}

const MelExtractor& default_mel_extractor() {
    static const MelExtractor extractor(kMelStft, kMelBands, kCanonicalRate);
    return extractor;
}

const MfccExtractor& default_mfcc_extractor() {
    static const MfccExtractor extractor(kMfccStft, kMfccMelBands, kMfccCoefficients, kCanonicalRate);
    return extractor;
}

namespace {

void require_segment(std::span<const float> segment) {
    if (segment.empty()) throw Error(ErrorCode::EmptyInput, "empty segment");
    if (segment.size() != kSegmentSamples)
        throw Error(ErrorCode::ShapeMismatch, "segment must hold " + std::to_string(kSegmentSamples) + " samples");
}

}  // namespace

FeatureMatrix mel_spectrogram(std::span<const float> segment, MelOptions options) {
    require_segment(segment);
    return default_mel_extractor().compute(segment, options);
}

FeatureMatrix mfcc(std::span<const float> segment) {
    require_segment(segment);
    return default_mfcc_extractor().compute(segment);
}

void standardize(FeatureMatrix& m) {
    if (m.values.empty()) return;
    double mean = 0.0;
    for (float v : m.values) mean += v;
    mean /= static_cast<double>(m.values.size());
    double var = 0.0;
    for (float v : m.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m.values.size());
    const double denom = std::sqrt(var) + 1e-8;
    for (float& v : m.values) v = static_cast<float>((v - mean) / denom);
}

FeatureMatrix model_input(std::span<const float> segment, FeatureKind kind) {
    FeatureMatrix m = kind == FeatureKind::Mel ? mel_spectrogram(segment) : mfcc(segment);
    standardize(m);
    return m;
}

std::pair<std::size_t, std::size_t> feature_shape(FeatureKind kind) noexcept {
    if (kind == FeatureKind::Mel) return {kMelBands, stft_frame_count(kSegmentSamples, kMelStft)};
    return {kMfccCoefficients, stft_frame_count(kSegmentSamples, kMfccStft)};
}

std::vector<std::uint8_t> encode_feature_dump(const FeatureMatrix& m) {
    ByteWriter w;
    w.raw("BFM1");
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.u32(static_cast<std::uint32_t>(m.rows));
    w.u32(static_cast<std::uint32_t>(m.cols));
    for (float v : m.values) w.f32(v);
    return std::move(w).take();
}

FeatureMatrix decode_feature_dump(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < 4 || r.str(4) != "BFM1") throw Error(ErrorCode::BadMagic, "not a BFM1 feature dump");
    FeatureMatrix m;
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw Error(ErrorCode::CorruptPayload, "unknown feature kind byte");
    m.kind = static_cast<FeatureKind>(kind);
    m.rows = r.u32();
    m.cols = r.u32();
    const std::size_t n = m.rows * m.cols;
    if (r.remaining() < n * 4) throw Error(ErrorCode::TruncatedPayload, "feature payload shorter than rows*cols");
    m.values.resize(n);
    for (auto& v : m.values) v = r.f32();
    return m;
}

}  // namespace breathsense
