#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "breathsense/models.hpp"

namespace breathsense {

enum class Decision : std::uint8_t { Pause, NoseInhale, NoseExhale, MouthInhale, MouthExhale, Uncertain };

std::string_view decision_name(Decision d) noexcept;  // "nose-inhale", ...
std::optional<Decision> parse_decision(std::string_view name) noexcept;

enum class Channel : std::uint8_t { Nasal, Oral };
enum class Phase : std::uint8_t { Inhale, Exhale };

std::optional<Channel> decision_channel(Decision d) noexcept;
std::optional<Phase> decision_phase(Decision d) noexcept;
Decision make_decision(Channel c, Phase p) noexcept;

struct BreathEvent {
    std::uint64_t seq = 0;  // 0-based emission index
    double t_start = 0.0;
    Decision decision = Decision::Uncertain;
    Decision stable = Decision::Uncertain;  // smoothed decision
    std::array<float, 3> channel_scores{};
    std::optional<std::array<float, 2>> phase_scores;
    double latency_ms = 0.0;
};

/// Cascade rule on channel scores (pause, nasal, oral). `phase` is only
/// called for breath segments and must return (inhale, exhale) scores.
struct CascadeOutcome {
    Decision decision = Decision::Uncertain;
    std::optional<std::array<float, 2>> phase_scores;
};
CascadeOutcome cascade_decide(const std::array<float, 3>& channel_scores,
                              const std::function<std::array<float, 2>()>& phase, double threshold = 0.5);

/// Features (once per distinct kind), channel model, then the phase model
/// when the cascade reaches it. Latency covers the whole call.
BreathEvent classify_segment(std::span<const float> samples, const Classifier& channel_model,
                             const Classifier& phase_model, double threshold = 0.5, double t_start = 0.0);

/// Checks that the two models have the roles the cascade expects.
void validate_cascade_models(const Classifier& channel_model, const Classifier& phase_model);

/// Majority vote over the last `window` non-uncertain raw decisions, ties to
/// the most recent; an uncertain input repeats the previous output.
class Smoother {
public:
    explicit Smoother(std::size_t window = 3);
    Decision push(Decision raw);
    Decision current() const noexcept { return current_; }

private:
    std::size_t window_;
    std::deque<Decision> recent_;
    Decision current_ = Decision::Uncertain;
};

/// Accumulates a sample feed and cuts 8000-sample windows every 4000 new
/// samples. Only the samples still needed are kept.
class SegmentBuffer {
public:
    struct Window {
        std::uint64_t index = 0;  // window k starts at sample 4000k
        std::vector<float> samples;
    };

    void push(std::span<const float> samples, std::vector<Window>& out);
    std::uint64_t total_samples() const noexcept { return total_; }

private:
    std::vector<float> buf_;     // samples from buf_start_ onward
    std::uint64_t buf_start_ = 0;
    std::uint64_t total_ = 0;
    std::uint64_t next_index_ = 0;
};

struct PipelineConfig {
    double threshold = 0.5;
    std::size_t smoothing_window = 3;
    std::size_t max_pending = 4;  // queued windows before the oldest is dropped (async)
};

/// Synchronous pipeline: every window is classified inside push_samples.
class StreamPipeline {
public:
    StreamPipeline(std::shared_ptr<const Classifier> channel_model, std::shared_ptr<const Classifier> phase_model,
                   PipelineConfig cfg = {});

    std::vector<BreathEvent> push_samples(std::span<const float> samples);

private:
    BreathEvent process(const SegmentBuffer::Window& w);

    std::shared_ptr<const Classifier> channel_;
    std::shared_ptr<const Classifier> phase_;
    PipelineConfig cfg_;
    SegmentBuffer buffer_;
    Smoother smoother_;
    std::uint64_t seq_ = 0;

    friend class AsyncStreamPipeline;
};

/// Producer/worker pipeline. push_samples never blocks on classification;
/// when more than max_pending windows wait, the oldest is dropped.
class AsyncStreamPipeline {
public:
    using Sink = std::function<void(const BreathEvent&)>;

    AsyncStreamPipeline(std::shared_ptr<const Classifier> channel_model, std::shared_ptr<const Classifier> phase_model,
                        Sink sink, PipelineConfig cfg = {});
    ~AsyncStreamPipeline();

    AsyncStreamPipeline(const AsyncStreamPipeline&) = delete;
    AsyncStreamPipeline& operator=(const AsyncStreamPipeline&) = delete;

    void push_samples(std::span<const float> samples);

    /// Process what is queued, then stop the worker. Idempotent.
    void finish();

    std::uint64_t dropped() const noexcept { return dropped_.load(); }
    std::uint64_t emitted() const noexcept { return emitted_.load(); }

private:
    void worker();

    StreamPipeline core_;
    Sink sink_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<SegmentBuffer::Window> pending_;
    bool finishing_ = false;
    std::atomic<std::uint64_t> dropped_{0};
    std::atomic<std::uint64_t> emitted_{0};
    std::thread thread_;
};

/// Feeds a canonical clip to a sink in chunks at wall-clock rate (speed 1.0)
/// or faster. Returns early when `stop` becomes true.
void replay_realtime(std::span<const float> samples, const std::function<void(std::span<const float>)>& sink,
                     const std::atomic<bool>& stop, double speed = 1.0, std::size_t chunk = 1600);

}  // namespace breathsense
