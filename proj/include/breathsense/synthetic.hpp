#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "breathsense/audio_io.hpp"
#include "breathsense/labels.hpp"
#include "breathsense/random.hpp"

namespace breathsense {

/// Audio stand-ins for the breathing classes: a low-level noise floor for
/// pause, band noise around nasal_hz for nose breaths and oral_hz for mouth
/// breaths. Exhales sit at center * exhale_ratio (1.0 makes phase invisible).
struct SynthStyle {
    double nasal_hz = 500.0;
    double oral_hz = 4000.0;
    double exhale_ratio = 1.0;
    double q = 2.0;
    double breath_rms = 0.1;
    double floor_rms = 1e-3;
};

struct SynthInterval {
    BreathClass label = BreathClass::Pause;
    double duration_s = 1.0;
};

struct SyntheticClip {
    AudioClip clip;
    LabelTrack labels;
};

SyntheticClip synthesize_clip(const std::vector<SynthInterval>& plan, std::uint64_t seed, const SynthStyle& style = {},
                              const std::string& clip_id = "synthetic");

/// Random pause / inhale / exhale cycles totalling about `seconds`.
std::vector<SynthInterval> random_breathing_plan(double seconds, Rng& rng);

/// Writes <dir>/<subject>_<k>.wav, matching .txt label files and
/// <dir>/manifest.tsv. Returns the manifest path.
std::string write_synthetic_dataset(const std::string& dir, int subjects, int clips_per_subject, double clip_seconds,
                                    std::uint64_t seed, const SynthStyle& style = {});

}  // namespace breathsense
