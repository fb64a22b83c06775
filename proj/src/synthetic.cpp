#include "breathsense/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "breathsense/augment.hpp"
#include "breathsense/error.hpp"

namespace breathsense {

namespace {

bool is_nasal(BreathClass c) { return c == BreathClass::NoseInhale || c == BreathClass::NoseExhale; }
bool is_exhale(BreathClass c) { return c == BreathClass::NoseExhale || c == BreathClass::MouthExhale; }

}  // namespace

SyntheticClip synthesize_clip(const std::vector<SynthInterval>& plan, std::uint64_t seed, const SynthStyle& style,
                              const std::string& clip_id) {
    Rng rng(seed);
    SyntheticClip out;
    out.clip.sample_rate = kCanonicalRate;
    out.clip.channels = 1;
    out.clip.source_id = clip_id;
    std::size_t at = 0;
    for (const auto& iv : plan) {
        if (!(iv.duration_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "synthetic interval durations must be positive");
        if (iv.label == BreathClass::BreathPlaceholder) throw Error(ErrorCode::InvalidArgument, "placeholder is not a synthetic class");
        const auto n = static_cast<std::size_t>(std::llround(iv.duration_s * kCanonicalRate));
        std::vector<float> part;
        if (iv.label == BreathClass::Pause) {
            part.resize(n);
            for (auto& v : part) v = static_cast<float>(style.floor_rms * standard_normal(rng));
        } else {
            double f = is_nasal(iv.label) ? style.nasal_hz : style.oral_hz;
            if (is_exhale(iv.label)) f *= style.exhale_ratio;
            part = band_noise(n, f, style.q, style.breath_rms, rng);
            // Short fades so interval edges do not click.
            const std::size_t fade = std::min<std::size_t>(160, n / 2);
            for (std::size_t i = 0; i < fade; ++i) {
                const float g = static_cast<float>(i) / static_cast<float>(fade);
                part[i] *= g;
                part[n - 1 - i] *= g;
            }
            for (auto& v : part) v += static_cast<float>(style.floor_rms * standard_normal(rng));
        }
        out.labels.intervals.push_back({static_cast<double>(at) / kCanonicalRate, static_cast<double>(at + n) / kCanonicalRate, iv.label});
        out.clip.samples.insert(out.clip.samples.end(), part.begin(), part.end());
        at += n;
    }
    return out;
}

std::vector<SynthInterval> random_breathing_plan(double seconds, Rng& rng) {
    std::vector<SynthInterval> plan;
    double t = 0.0;
    auto push = [&](BreathClass c, double lo, double hi) {
        const double d = std::round((lo + (hi - lo) * uniform01(rng)) * 100.0) / 100.0;
        plan.push_back({c, d});
        t += d;
    };
    while (t < seconds) {
        push(BreathClass::Pause, 0.8, 2.0);
        const bool nasal = uniform01(rng) < 0.5;
        push(nasal ? BreathClass::NoseInhale : BreathClass::MouthInhale, 1.0, 2.5);
        push(nasal ? BreathClass::NoseExhale : BreathClass::MouthExhale, 1.0, 2.5);
    }
    return plan;
}

std::string write_synthetic_dataset(const std::string& dir, int subjects, int clips_per_subject, double clip_seconds,
                                    std::uint64_t seed, const SynthStyle& style) {
    namespace fs = std::filesystem;
    if (subjects < 1 || clips_per_subject < 1) throw Error(ErrorCode::InvalidArgument, "need at least one subject and clip");
    fs::create_directories(dir);
    const std::string manifest = (fs::path(dir) / "manifest.tsv").string();
    std::ofstream m(manifest);
    if (!m) throw Error(ErrorCode::IoError, "cannot write " + manifest);
    m << "clip_path\tsubject\tsession\tlabel_path\texercise_tag\n";
    Rng rng(seed);
    for (int s = 0; s < subjects; ++s) {
        const std::string subject = "S" + std::to_string(s + 1);
        for (int k = 0; k < clips_per_subject; ++k) {
            const std::string stem = subject + "_" + std::to_string(k + 1);
            const auto plan = random_breathing_plan(clip_seconds, rng);
            const auto synth = synthesize_clip(plan, rng(), style, stem);
            write_wav((fs::path(dir) / (stem + ".wav")).string(), synth.clip);
            write_label_file((fs::path(dir) / (stem + ".txt")).string(), synth.labels);
            m << stem << ".wav\t" << subject << "\t" << (k + 1) << "\t" << stem << ".txt\tmixed\n";
        }
    }
    return manifest;
}

}  // namespace breathsense
