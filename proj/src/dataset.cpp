#include "breathsense/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "breathsense/audio_io.hpp"
#include "breathsense/error.hpp"

namespace breathsense {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto tab = line.find('\t', pos);
        out.emplace_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    return out;
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

std::vector<ManifestRow> parse_manifest(std::string_view text, const std::string& base_dir) {
    std::vector<ManifestRow> rows;
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;
        auto f = split_tabs(line);
        if (rows.empty() && (f[0] == "clip" || f[0] == "clip_path")) continue;  // header
        if (f.size() < 4 || f.size() > 5)
            throw Error(ErrorCode::MalformedLine, "manifest line " + std::to_string(line_no) + ": expected 4 or 5 tab-separated fields");
        ManifestRow r;
        r.clip_path = resolve(base_dir, f[0]);
        r.subject = f[1];
        r.session = f[2];
        r.label_path = f[3] == "-" ? "" : resolve(base_dir, f[3]);
        if (f.size() == 5) r.exercise_tag = f[4];
        if (f[0].empty() || r.subject.empty())
            throw Error(ErrorCode::MalformedLine, "manifest line " + std::to_string(line_no) + ": empty clip path or subject");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), fs::path(path).parent_path().string());
}

std::vector<std::string> Dataset::subjects() const {
    std::set<std::string> s;
    for (const auto& it : items) s.insert(it.subject);
    return {s.begin(), s.end()};
}

std::vector<LabeledSegment> load_clip_segments(const ManifestRow& row, std::size_t* dropped) {
    const LabelTrack track = read_label_file(row.label_path);
    AudioClip clip = canonicalize(read_wav(row.clip_path));
    clip.source_id = row.clip_path;
    std::vector<LabeledSegment> out;
    std::size_t n_dropped = 0;
    for (auto& seg : segment_clip(clip)) {
        auto labelled = try_assign_labels(std::move(seg), track);
        if (!labelled) {
            ++n_dropped;
            continue;
        }
        out.push_back({row.subject, row.session, row.exercise_tag, std::move(*labelled)});
    }
    if (dropped) *dropped = n_dropped;
    return out;
}

Dataset load_dataset(const std::vector<ManifestRow>& rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyManifest, "manifest has no rows");
    Dataset ds;
    for (const auto& row : rows) {
        if (row.label_path.empty()) {
            ds.warnings.push_back("skipping unlabeled clip " + row.clip_path);
            continue;
        }
        std::size_t dropped = 0;
        auto segs = load_clip_segments(row, &dropped);
        if (dropped) ds.warnings.push_back(row.clip_path + ": " + std::to_string(dropped) + " windows without labels dropped");
        std::move(segs.begin(), segs.end(), std::back_inserter(ds.items));
    }
    return ds;
}

std::array<std::size_t, kNumBreathClasses> class_counts(const std::vector<LabeledSegment>& items) {
    std::array<std::size_t, kNumBreathClasses> counts{};
    for (const auto& it : items)
        for (std::size_t k = 0; k < kNumBreathClasses; ++k) counts[k] += (*it.segment.labels)[k];
    return counts;
}

}  // namespace breathsense
