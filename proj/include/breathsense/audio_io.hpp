#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace breathsense {

inline constexpr int kCanonicalRate = 16000;

/// Decoded audio. Samples are interleaved when channels > 1 and scaled to
/// [-1, 1]. A canonical clip is mono at 16 kHz.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = kCanonicalRate;
    int channels = 1;
    std::string source_id;

    std::size_t frames() const noexcept { return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0; }
    double duration_s() const noexcept { return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0; }
    bool is_canonical() const noexcept { return channels == 1 && sample_rate == kCanonicalRate; }
};

/// Accepts RIFF/WAVE with PCM16, PCM24, PCM32 or IEEE float32 payloads
/// (including WAVE_FORMAT_EXTENSIBLE wrappers of those).
AudioClip read_wav(const std::string& path);
AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id = {});

/// Writes PCM16 only.
void write_wav(const std::string& path, const AudioClip& clip);
std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip);

AudioClip downmix_mono(const AudioClip& clip);

/// Band-limited rational resampling with a Kaiser-windowed sinc kernel
/// (64 taps per phase at the lower of the two rates).
AudioClip resample(const AudioClip& clip, int target_rate);

/// downmix_mono followed by resample to 16 kHz.
AudioClip canonicalize(const AudioClip& clip);

}  // namespace breathsense
