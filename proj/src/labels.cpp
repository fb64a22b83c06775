#include "breathsense/labels.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "breathsense/error.hpp"

namespace breathsense {

namespace {

constexpr std::array<std::string_view, kNumBreathClasses> kNames = {
    "pause", "nose-inhale", "nose-exhale", "mouth-inhale", "mouth-exhale"};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

int class_code(BreathClass c) noexcept { return static_cast<int>(c); }

std::string_view class_name(BreathClass c) noexcept {
    if (c == BreathClass::BreathPlaceholder) return "breath";
    return kNames[static_cast<std::size_t>(c)];
}

std::optional<BreathClass> class_from_code(int code) noexcept {
    if (code >= 0 && code < static_cast<int>(kNumBreathClasses)) return static_cast<BreathClass>(code);
    if (code == 9) return BreathClass::BreathPlaceholder;
    return std::nullopt;
}

std::optional<BreathClass> class_from_name(std::string_view name) noexcept {
    const std::string key = lower(trim(name));
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (key == kNames[i]) return static_cast<BreathClass>(i);
    if (key == "breath") return BreathClass::BreathPlaceholder;
    return std::nullopt;
}

LabelTrack parse_labels(std::string_view text, ParseOptions options) {
    LabelTrack track;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) continue;

        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (true) {
            const auto tab = line.find('\t', pos);
            fields.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
            if (tab == std::string_view::npos) break;
            pos = tab + 1;
        }
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != 3) throw Error(ErrorCode::MalformedLine, where + ": expected 3 tab-separated fields");

        const auto start = parse_number(fields[0]);
        const auto end = parse_number(fields[1]);
        if (!start || !end) throw Error(ErrorCode::MalformedLine, where + ": non-numeric time");
        if (*start < 0.0) throw Error(ErrorCode::MalformedLine, where + ": negative start time");
        if (*end <= *start) throw Error(ErrorCode::NegativeDuration, where + ": end <= start");

        std::optional<BreathClass> cls;
        const std::string_view token = trim(fields[2]);
        if (auto code = parse_number(token)) {
            if (*code != std::floor(*code)) throw Error(ErrorCode::MalformedLine, where + ": fractional class code");
            cls = class_from_code(static_cast<int>(*code));
        } else {
            cls = class_from_name(token);
            if (!cls) throw Error(ErrorCode::MalformedLine, where + ": unrecognized label token");
        }
        if (!cls || (*cls == BreathClass::BreathPlaceholder && !options.allow_placeholder))
            throw Error(ErrorCode::UnknownClass, where + ": class outside 0..4");

        track.intervals.push_back({*start, *end, *cls});
    }
    std::stable_sort(track.intervals.begin(), track.intervals.end(),
                     [](const LabelInterval& a, const LabelInterval& b) { return a.start_s < b.start_s; });
    return track;
}

std::string write_labels(const LabelTrack& track) {
    std::string out;
    char buf[96];
    for (const auto& iv : track.intervals) {
        const int n = std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%d\n", iv.start_s, iv.end_s, class_code(iv.label));
        out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
}

LabelTrack read_label_file(const std::string& path, ParseOptions options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_labels(ss.str(), options);
}

void write_label_file(const std::string& path, const LabelTrack& track) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << write_labels(track);
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

std::size_t segment_count(std::size_t num_samples) noexcept {
    if (num_samples < kSegmentSamples) return 0;
    return (num_samples - kSegmentSamples) / kSegmentStride + 1;
}

std::vector<Segment> segment_clip(const AudioClip& clip) {
    if (!clip.is_canonical()) throw Error(ErrorCode::InvalidArgument, "segment_clip expects 16 kHz mono audio");
    const std::size_t count = segment_count(clip.samples.size());
    if (count == 0) throw Error(ErrorCode::ClipTooShort, "clip shorter than 0.5 s");
    std::vector<Segment> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t begin = k * kSegmentStride;
        Segment s;
        s.clip_id = clip.source_id;
        s.start_s = static_cast<double>(begin) / kCanonicalRate;
        s.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                         clip.samples.begin() + static_cast<std::ptrdiff_t>(begin + kSegmentSamples));
        out.push_back(std::move(s));
    }
    return out;
}

std::optional<Segment> try_assign_labels(Segment segment, const LabelTrack& track) {
    const double w0 = segment.start_s;
    const double w1 = segment.start_s + kSegmentSeconds;
    LabelVector labels{};
    bool any = false;
    for (const auto& iv : track.intervals) {
        if (iv.label == BreathClass::BreathPlaceholder) continue;
        const double overlap = std::min(w1, iv.end_s) - std::max(w0, iv.start_s);
        // Small slack so a fixture built at exactly 10 ms survives decimal round-off.
        if (overlap >= kMinLabelOverlapS - 1e-9) {
            labels[static_cast<std::size_t>(iv.label)] = 1;
            any = true;
        }
    }
    if (!any) return std::nullopt;
    segment.labels = labels;
    return segment;
}

Segment assign_labels(Segment segment, const LabelTrack& track) {
    const double start = segment.start_s;
    auto labelled = try_assign_labels(std::move(segment), track);
    if (!labelled) throw Error(ErrorCode::NoOverlap, "no interval overlaps window at " + std::to_string(start) + " s");
    return std::move(*labelled);
}

}  // namespace breathsense
