#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "breathsense/labels.hpp"
#include "breathsense/random.hpp"

namespace breathsense {

/// Background-noise source for augmentation (mono, 16 kHz).
class NoiseBank {
public:
    explicit NoiseBank(std::vector<float> samples, std::uint64_t rng_seed = 0);

    std::span<const float> samples() const noexcept { return samples_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::vector<float> samples_;
    std::uint64_t seed_;
};

struct SnrRange {
    double min_db = 20.0;
    double max_db = 40.0;
};

double sample_snr(Rng& rng, SnrRange range = {});

double mean_power(std::span<const float> x) noexcept;

struct MixResult {
    Segment segment;
    double gain = 0.0;
    std::size_t noise_offset = 0;
};

/// Adds a random 8000-sample slice of the bank scaled to hit snr_db exactly.
/// No clipping is applied. Labels are carried over.
MixResult mix_noise_detailed(const Segment& segment, const NoiseBank& bank, double snr_db, Rng& rng);
Segment mix_noise(const Segment& segment, const NoiseBank& bank, double snr_db, Rng& rng);

/// Gaussian noise through an RBJ band-pass, scaled to the given RMS.
std::vector<float> band_noise(std::size_t n, double center_hz, double q, double rms, Rng& rng, int sample_rate = 16000);

/// Synthetic babble: several amplitude-modulated band-passed noise "talkers".
std::vector<float> generate_babble(double seconds, std::uint64_t seed, int sample_rate = 16000);

}  // namespace breathsense
