#include <doctest.h>

#include <random>

#include "breathsense/error.hpp"
#include "breathsense/labels.hpp"
#include "oracles.hpp"

using namespace breathsense;

namespace {

ErrorCode parse_error(std::string_view text, ParseOptions opt = {}) {
    try {
        parse_labels(text, opt);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("parse_labels did not throw");
    return ErrorCode::InvalidArgument;
}

AudioClip silent_clip(std::size_t n) {
    AudioClip c;
    c.samples.assign(n, 0.0f);
    c.source_id = "c";
    return c;
}

Segment window_at(double start_s) {
    Segment s;
    s.start_s = start_s;
    s.samples.assign(kSegmentSamples, 0.0f);
    return s;
}

}  // namespace

TEST_CASE("class codes and names") {
    for (int code = 0; code < 5; ++code) {
        const auto c = class_from_code(code);
        REQUIRE(c);
        CHECK(class_code(*c) == code);
        CHECK(class_from_name(class_name(*c)) == c);
    }
    CHECK_FALSE(class_from_code(5));
    CHECK(class_from_code(9) == BreathClass::BreathPlaceholder);
    CHECK(class_from_name("NOSE-INHALE") == BreathClass::NoseInhale);
}

TEST_CASE("parser accepts codes, names, CRLF and blank lines and sorts by start") {
    const auto t = parse_labels("1.0\t2.0\t3\r\n\n0\t1.0\tpause\n2.0\t2.5\tmouth-exhale\n");
    REQUIRE(t.intervals.size() == 3);
    CHECK(t.intervals[0] == LabelInterval{0.0, 1.0, BreathClass::Pause});
    CHECK(t.intervals[1] == LabelInterval{1.0, 2.0, BreathClass::MouthInhale});
    CHECK(t.intervals[2].label == BreathClass::MouthExhale);
}

TEST_CASE("parser error taxonomy") {
    CHECK(parse_error("0\t1\n") == ErrorCode::MalformedLine);
    CHECK(parse_error("0\t1\t1\textra\n") == ErrorCode::MalformedLine);
    CHECK(parse_error("a\t1\t1\n") == ErrorCode::MalformedLine);
    CHECK(parse_error("-1\t1\t1\n") == ErrorCode::MalformedLine);
    CHECK(parse_error("0\t1\t1.5\n") == ErrorCode::MalformedLine);
    CHECK(parse_error("0\t1\tsneeze\n") == ErrorCode::MalformedLine);
    CHECK(parse_error("2\t1\t1\n") == ErrorCode::NegativeDuration);
    CHECK(parse_error("1\t1\t1\n") == ErrorCode::NegativeDuration);
    CHECK(parse_error("0\t1\t7\n") == ErrorCode::UnknownClass);
    CHECK(parse_error("0\t1\t9\n") == ErrorCode::UnknownClass);
    ParseOptions opt;
    opt.allow_placeholder = true;
    CHECK(parse_labels("0\t1\t9\n", opt).intervals.at(0).label == BreathClass::BreathPlaceholder);
}

TEST_CASE("writer is bit-exact and round-trips") {
    LabelTrack t;
    t.intervals = {{0.0, 0.25, BreathClass::Pause}, {0.25, 1.123456, BreathClass::NoseExhale}};
    const std::string text = write_labels(t);
    CHECK(text == "0.000000\t0.250000\t0\n0.250000\t1.123456\t2\n");
    CHECK(parse_labels(text) == t);
    CHECK(write_labels(parse_labels(text)) == text);

    std::mt19937 g(5);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    LabelTrack r;
    double t0 = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double len = 0.001 + u(g) / 50.0;
        r.intervals.push_back({t0, t0 + len, static_cast<BreathClass>(g() % 5)});
        t0 += len;
    }
    const std::string once = write_labels(r);
    CHECK(write_labels(parse_labels(once)) == once);

    oracle::TempDir dir;
    write_label_file(dir.file("a.txt"), r);
    CHECK(oracle::read_text(dir.file("a.txt")) == once);
    CHECK(write_labels(read_label_file(dir.file("a.txt"))) == once);
}

TEST_CASE("segment count law") {
    CHECK(segment_count(0) == 0);
    CHECK(segment_count(7999) == 0);
    CHECK(segment_count(8000) == 1);
    CHECK(segment_count(11999) == 1);
    CHECK(segment_count(12000) == 2);
    CHECK(segment_count(120 * 16000) == 479);
    std::mt19937 g(1);
    for (int i = 0; i < 2000; ++i) {
        const std::size_t n = g() % 2'000'000;
        const std::size_t expect = n < 8000 ? 0 : (n - 8000) / 4000 + 1;
        CHECK(segment_count(n) == expect);
    }
}

TEST_CASE("segment_clip slices at 250 ms strides") {
    AudioClip c = silent_clip(20000);
    for (std::size_t i = 0; i < c.samples.size(); ++i) c.samples[i] = static_cast<float>(i);
    const auto segs = segment_clip(c);
    REQUIRE(segs.size() == 4);
    for (std::size_t k = 0; k < segs.size(); ++k) {
        CHECK(segs[k].start_s == doctest::Approx(0.25 * double(k)));
        CHECK(segs[k].samples.size() == kSegmentSamples);
        CHECK(segs[k].samples.front() == float(k * 4000));
        CHECK(segs[k].clip_id == "c");
    }
    CHECK_THROWS_AS(segment_clip(silent_clip(7999)), Error);
    AudioClip wrong = silent_clip(16000);
    wrong.sample_rate = 8000;
    CHECK_THROWS_AS(segment_clip(wrong), Error);
}

TEST_CASE("multi-label assignment uses a 10 ms overlap threshold") {
    LabelTrack t;
    t.intervals = {{0.0, 0.26, BreathClass::Pause}, {0.26, 0.49, BreathClass::NoseInhale}, {0.49, 2.0, BreathClass::NoseExhale}};
    const auto s0 = assign_labels(window_at(0.0), t);
    CHECK(*s0.labels == LabelVector{1, 1, 1, 0, 0});

    // 0.25 .. 0.75: pause overlaps 10 ms (counts), inhale 230 ms, exhale 260 ms.
    CHECK(*assign_labels(window_at(0.25), t).labels == LabelVector{1, 1, 1, 0, 0});
    // 0.2505 .. 0.7505: pause overlap 9.5 ms (does not count).
    CHECK(*assign_labels(window_at(0.2505), t).labels == LabelVector{0, 1, 1, 0, 0});
    CHECK(*assign_labels(window_at(1.0), t).labels == LabelVector{0, 0, 1, 0, 0});

    CHECK_FALSE(try_assign_labels(window_at(3.0), t));
    CHECK_THROWS_AS(assign_labels(window_at(3.0), t), Error);

    LabelTrack placeholder;
    placeholder.intervals = {{0.0, 5.0, BreathClass::BreathPlaceholder}};
    CHECK_FALSE(try_assign_labels(window_at(0.0), placeholder));
}
