#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "breathsense/labels.hpp"

namespace breathsense {

/// One manifest row. Relative paths are resolved against the manifest's
/// directory; label_path is empty for unlabeled clips ("-" in the file).
struct ManifestRow {
    std::string clip_path;
    std::string subject;
    std::string session;
    std::string label_path;
    std::string exercise_tag;
};

/// Tab-separated rows: clip, subject, session, labels, exercise tag.
/// '#' starts a comment line; a first row whose first field is "clip" or
/// "clip_path" is a header.
std::vector<ManifestRow> parse_manifest(std::string_view text, const std::string& base_dir = "");
std::vector<ManifestRow> read_manifest(const std::string& path);

/// A labelled 500 ms window plus its provenance.
struct LabeledSegment {
    std::string subject;
    std::string session;
    std::string exercise_tag;
    Segment segment;  // labels always set
};

struct Dataset {
    std::vector<LabeledSegment> items;
    std::vector<std::string> warnings;  // skipped clips and windows

    std::vector<std::string> subjects() const;  // sorted, unique
};

/// Decode, canonicalize, segment and label one clip. Windows without any
/// qualifying label overlap are dropped and counted in `dropped`.
std::vector<LabeledSegment> load_clip_segments(const ManifestRow& row, std::size_t* dropped = nullptr);

/// Load every labelled row. Unlabeled rows are skipped with a warning; an
/// empty manifest throws EmptyManifest.
Dataset load_dataset(const std::vector<ManifestRow>& rows);

/// Number of segments carrying each of the five classes.
std::array<std::size_t, kNumBreathClasses> class_counts(const std::vector<LabeledSegment>& items);

}  // namespace breathsense
