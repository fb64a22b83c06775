#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "breathsense/audio_io.hpp"

namespace breathsense {

enum class BreathClass : std::uint8_t {
    Pause = 0,
    NoseInhale = 1,
    NoseExhale = 2,
    MouthInhale = 3,
    MouthExhale = 4,
    // Unrefined "some breath" marker written by the labeling assistant; a
    // human replaces it with 1..4. Never part of a segment label vector.
    BreathPlaceholder = 9,
};

inline constexpr std::size_t kNumBreathClasses = 5;
inline constexpr std::size_t kSegmentSamples = 8000;  // 500 ms at 16 kHz
inline constexpr std::size_t kSegmentStride = 4000;   // 250 ms
inline constexpr double kSegmentSeconds = 0.5;
inline constexpr double kStrideSeconds = 0.25;
inline constexpr double kMinLabelOverlapS = 0.010;

int class_code(BreathClass c) noexcept;
std::string_view class_name(BreathClass c) noexcept;
std::optional<BreathClass> class_from_code(int code) noexcept;
std::optional<BreathClass> class_from_name(std::string_view name) noexcept;

struct LabelInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    BreathClass label = BreathClass::Pause;

    bool operator==(const LabelInterval&) const = default;
};

struct LabelTrack {
    std::vector<LabelInterval> intervals;

    bool operator==(const LabelTrack&) const = default;
};

using LabelVector = std::array<std::uint8_t, kNumBreathClasses>;

struct Segment {
    std::string clip_id;
    double start_s = 0.0;
    std::vector<float> samples;
    std::optional<LabelVector> labels;
};

struct ParseOptions {
    bool allow_placeholder = false;
};

/// Lines of `<start>\t<end>\t<token>`; the token is a numeric code 0..4 or a
/// class name (case-insensitive). Blank lines are ignored.
LabelTrack parse_labels(std::string_view text, ParseOptions options = {});

/// Bit-exact writer: six decimals on times, numeric codes, LF endings.
std::string write_labels(const LabelTrack& track);

LabelTrack read_label_file(const std::string& path, ParseOptions options = {});
void write_label_file(const std::string& path, const LabelTrack& track);

std::size_t segment_count(std::size_t num_samples) noexcept;

/// 500 ms windows at a 250 ms stride; trailing partial windows are dropped.
std::vector<Segment> segment_clip(const AudioClip& clip);

/// Classes overlapping the window by at least 10 ms; nullopt when none do.
std::optional<Segment> try_assign_labels(Segment segment, const LabelTrack& track);

/// Throws NoOverlap when no interval qualifies.
Segment assign_labels(Segment segment, const LabelTrack& track);

}  // namespace breathsense
