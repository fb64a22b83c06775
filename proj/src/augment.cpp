#include "breathsense/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "breathsense/error.hpp"

namespace breathsense {

NoiseBank::NoiseBank(std::vector<float> samples, std::uint64_t rng_seed) : samples_(std::move(samples)), seed_(rng_seed) {
    if (samples_.size() < kSegmentSamples) throw Error(ErrorCode::InvalidArgument, "noise bank shorter than one segment");
    if (mean_power(samples_) <= 0.0) throw Error(ErrorCode::SilentNoiseSlice, "noise bank has zero power");
}

double sample_snr(Rng& rng, SnrRange range) {
    if (range.max_db < range.min_db) throw Error(ErrorCode::InvalidArgument, "SNR range inverted");
    if (range.max_db == range.min_db) return range.min_db;
    return range.min_db + (range.max_db - range.min_db) * uniform01(rng);
}

double mean_power(std::span<const float> x) noexcept {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (float v : x) acc += static_cast<double>(v) * v;
    return acc / static_cast<double>(x.size());
}

MixResult mix_noise_detailed(const Segment& segment, const NoiseBank& bank, double snr_db, Rng& rng) {
    const double p_signal = mean_power(segment.samples);
    if (p_signal <= 0.0) throw Error(ErrorCode::SilentSignal, "segment has zero power; SNR undefined");

    constexpr int kMaxDraws = 32;
    const auto noise = bank.samples();
    const std::size_t n = segment.samples.size();
    const std::size_t span_len = noise.size() - n + 1;
    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
        const std::size_t offset = uniform_index(rng, span_len);
        const auto slice = noise.subspan(offset, n);
        const double p_noise = mean_power(slice);
        if (p_noise <= 0.0) continue;
        const double gain = std::sqrt(p_signal / (p_noise * std::pow(10.0, snr_db / 10.0)));
        MixResult out{segment, gain, offset};
        for (std::size_t i = 0; i < n; ++i)
            out.segment.samples[i] = static_cast<float>(segment.samples[i] + gain * slice[i]);
        return out;
    }
    throw Error(ErrorCode::SilentNoiseSlice, "noise bank yielded only silent slices");
}

Segment mix_noise(const Segment& segment, const NoiseBank& bank, double snr_db, Rng& rng) {
    return mix_noise_detailed(segment, bank, snr_db, rng).segment;
}

namespace {

// RBJ band-pass biquad (constant 0 dB peak gain).
struct BandPass {
    double b0, b2, a1, a2;
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

    BandPass(double center_hz, double q, int rate) {
        const double w0 = 2.0 * std::numbers::pi * center_hz / rate;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double a0 = 1.0 + alpha;
        b0 = alpha / a0;
        b2 = -alpha / a0;
        a1 = -2.0 * std::cos(w0) / a0;
        a2 = (1.0 - alpha) / a0;
    }

    double operator()(double x) {
        const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        return y;
    }
};

}  // namespace

std::vector<float> band_noise(std::size_t n, double center_hz, double q, double rms, Rng& rng, int sample_rate) {
    BandPass bp(center_hz, q, sample_rate);
    std::vector<double> y(n);
    for (auto& v : y) v = bp(standard_normal(rng));
    double power = 0.0;
    for (double v : y) power += v * v;
    const double scale = power > 0.0 ? rms / std::sqrt(power / static_cast<double>(n)) : 0.0;
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(y[i] * scale);
    return out;
}

std::vector<float> generate_babble(double seconds, std::uint64_t seed, int sample_rate) {
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(seconds * sample_rate);
    std::vector<double> mix(n, 0.0);
    constexpr int kTalkers = 6;
    for (int t = 0; t < kTalkers; ++t) {
        // Two formant-like bands per talker, syllable-rate envelope.
        BandPass f1(300.0 + 600.0 * uniform01(rng), 2.0, sample_rate);
        BandPass f2(1000.0 + 2000.0 * uniform01(rng), 3.0, sample_rate);
        const double syllable_hz = 3.0 + 3.0 * uniform01(rng);
        const double phase = 2.0 * std::numbers::pi * uniform01(rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double white = 2.0 * uniform01(rng) - 1.0;
            const double env = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * syllable_hz * static_cast<double>(i) / sample_rate + phase);
            mix[i] += env * env * (f1(white) + 0.6 * f2(white));
        }
    }
    double peak = 0.0;
    for (double v : mix) peak = std::max(peak, std::abs(v));
    std::vector<float> out(n);
    const double scale = peak > 0.0 ? 0.5 / peak : 0.0;
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(mix[i] * scale);
    return out;
}

}  // namespace breathsense
