#include "breathsense/stream.hpp"

#include <algorithm>
#include <chrono>

#include "breathsense/error.hpp"

namespace breathsense {

namespace {

constexpr std::array<std::string_view, 6> kDecisionNames = {"pause",       "nose-inhale", "nose-exhale",
                                                             "mouth-inhale", "mouth-exhale", "uncertain"};

std::array<float, 3> to3(const std::vector<float>& v) { return {v.at(0), v.at(1), v.at(2)}; }
std::array<float, 2> to2(const std::vector<float>& v) { return {v.at(0), v.at(1)}; }

}  // namespace

std::string_view decision_name(Decision d) noexcept {
    return kDecisionNames[static_cast<std::size_t>(d)];
}

std::optional<Decision> parse_decision(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kDecisionNames.size(); ++i)
        if (kDecisionNames[i] == name) return static_cast<Decision>(i);
    return std::nullopt;
}

std::optional<Channel> decision_channel(Decision d) noexcept {
    switch (d) {
        case Decision::NoseInhale:
        case Decision::NoseExhale: return Channel::Nasal;
        case Decision::MouthInhale:
        case Decision::MouthExhale: return Channel::Oral;
        default: return std::nullopt;
    }
}

std::optional<Phase> decision_phase(Decision d) noexcept {
    switch (d) {
        case Decision::NoseInhale:
        case Decision::MouthInhale: return Phase::Inhale;
        case Decision::NoseExhale:
        case Decision::MouthExhale: return Phase::Exhale;
        default: return std::nullopt;
    }
}

Decision make_decision(Channel c, Phase p) noexcept {
    if (c == Channel::Nasal) return p == Phase::Inhale ? Decision::NoseInhale : Decision::NoseExhale;
    return p == Phase::Inhale ? Decision::MouthInhale : Decision::MouthExhale;
}

CascadeOutcome cascade_decide(const std::array<float, 3>& s, const std::function<std::array<float, 2>()>& phase,
                              double threshold) {
    const float top = std::max({s[0], s[1], s[2]});
    if (top < threshold) return {Decision::Uncertain, std::nullopt};
    if (s[0] >= threshold && s[0] > s[1] && s[0] > s[2]) return {Decision::Pause, std::nullopt};
    const Channel ch = s[1] >= s[2] ? Channel::Nasal : Channel::Oral;
    const auto ph = phase();
    return {make_decision(ch, ph[0] >= ph[1] ? Phase::Inhale : Phase::Exhale), ph};
}

void validate_cascade_models(const Classifier& channel_model, const Classifier& phase_model) {
    if (channel_model.spec.role != ModelRole::Channel)
        throw Error(ErrorCode::ModelFeatureMismatch, "first cascade stage must be a channel model");
    if (phase_model.spec.role != ModelRole::Phase)
        throw Error(ErrorCode::ModelFeatureMismatch, "second cascade stage must be a phase model");
}

BreathEvent classify_segment(std::span<const float> samples, const Classifier& channel_model,
                             const Classifier& phase_model, double threshold, double t_start) {
    const auto t0 = std::chrono::steady_clock::now();
    const FeatureMatrix ch_in = model_input(samples, channel_model.spec.feature_kind);
    BreathEvent ev;
    ev.t_start = t_start;
    ev.channel_scores = to3(channel_model.scores(ch_in));
    const auto outcome = cascade_decide(
        ev.channel_scores,
        [&] {
            if (phase_model.spec.feature_kind == channel_model.spec.feature_kind) return to2(phase_model.scores(ch_in));
            return to2(phase_model.scores(model_input(samples, phase_model.spec.feature_kind)));
        },
        threshold);
    ev.decision = outcome.decision;
    ev.stable = outcome.decision;
    ev.phase_scores = outcome.phase_scores;
    ev.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return ev;
}

Smoother::Smoother(std::size_t window) : window_(window) {
    if (window == 0) throw Error(ErrorCode::InvalidArgument, "smoothing window must be at least 1");
}

Decision Smoother::push(Decision raw) {
    if (raw == Decision::Uncertain) return current_;
    recent_.push_back(raw);
    if (recent_.size() > window_) recent_.pop_front();
    std::size_t best_count = 0, best_last = 0;
    for (std::size_t i = 0; i < recent_.size(); ++i) {
        std::size_t count = 0, last = 0;
        for (std::size_t j = 0; j < recent_.size(); ++j)
            if (recent_[j] == recent_[i]) {
                ++count;
                last = j;
            }
        if (count > best_count || (count == best_count && last > best_last)) {
            best_count = count;
            best_last = last;
            current_ = recent_[i];
        }
    }
    return current_;
}

void SegmentBuffer::push(std::span<const float> samples, std::vector<Window>& out) {
    buf_.insert(buf_.end(), samples.begin(), samples.end());
    total_ += samples.size();
    while (next_index_ * kSegmentStride + kSegmentSamples <= total_) {
        const std::uint64_t start = next_index_ * kSegmentStride;
        const auto first = buf_.begin() + static_cast<std::ptrdiff_t>(start - buf_start_);
        out.push_back({next_index_, std::vector<float>(first, first + kSegmentSamples)});
        ++next_index_;
    }
    const std::uint64_t keep_from = next_index_ * kSegmentStride;
    if (keep_from > buf_start_) {
        const auto n = std::min<std::uint64_t>(keep_from - buf_start_, buf_.size());
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n));
        buf_start_ += n;
    }
}

StreamPipeline::StreamPipeline(std::shared_ptr<const Classifier> channel_model,
                               std::shared_ptr<const Classifier> phase_model, PipelineConfig cfg)
    : channel_(std::move(channel_model)), phase_(std::move(phase_model)), cfg_(cfg), smoother_(cfg.smoothing_window) {
    if (!channel_ || !phase_) throw Error(ErrorCode::InvalidArgument, "stream pipeline needs both models");
    validate_cascade_models(*channel_, *phase_);
}

BreathEvent StreamPipeline::process(const SegmentBuffer::Window& w) {
    BreathEvent ev = classify_segment(w.samples, *channel_, *phase_, cfg_.threshold,
                                      kStrideSeconds * static_cast<double>(w.index));
    ev.seq = seq_++;
    ev.stable = smoother_.push(ev.decision);
    return ev;
}

std::vector<BreathEvent> StreamPipeline::push_samples(std::span<const float> samples) {
    std::vector<SegmentBuffer::Window> windows;
    buffer_.push(samples, windows);
    std::vector<BreathEvent> events;
    for (const auto& w : windows) events.push_back(process(w));
    return events;
}

AsyncStreamPipeline::AsyncStreamPipeline(std::shared_ptr<const Classifier> channel_model,
                                         std::shared_ptr<const Classifier> phase_model, Sink sink, PipelineConfig cfg)
    : core_(std::move(channel_model), std::move(phase_model), cfg), sink_(std::move(sink)) {
    if (cfg.max_pending == 0) throw Error(ErrorCode::InvalidArgument, "max_pending must be at least 1");
    thread_ = std::thread([this] { worker(); });
}

AsyncStreamPipeline::~AsyncStreamPipeline() {
    finish();
}

void AsyncStreamPipeline::push_samples(std::span<const float> samples) {
    std::vector<SegmentBuffer::Window> windows;
    core_.buffer_.push(samples, windows);
    if (windows.empty()) return;
    {
        std::lock_guard lock(mutex_);
        for (auto& w : windows) {
            pending_.push_back(std::move(w));
            while (pending_.size() > core_.cfg_.max_pending) {
                pending_.pop_front();
                dropped_.fetch_add(1);
            }
        }
    }
    cv_.notify_one();
}

void AsyncStreamPipeline::finish() {
    {
        std::lock_guard lock(mutex_);
        finishing_ = true;
    }
    cv_.notify_one();
    if (thread_.joinable()) thread_.join();
}

void AsyncStreamPipeline::worker() {
    while (true) {
        SegmentBuffer::Window w;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return finishing_ || !pending_.empty(); });
            if (pending_.empty()) return;
            w = std::move(pending_.front());
            pending_.pop_front();
        }
        const BreathEvent ev = core_.process(w);
        emitted_.fetch_add(1);
        if (sink_) sink_(ev);
    }
}

void replay_realtime(std::span<const float> samples, const std::function<void(std::span<const float>)>& sink,
                     const std::atomic<bool>& stop, double speed, std::size_t chunk) {
    if (chunk == 0) throw Error(ErrorCode::InvalidArgument, "replay chunk must be positive");
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t off = 0; off < samples.size() && !stop.load(); off += chunk) {
        const std::size_t n = std::min(chunk, samples.size() - off);
        if (speed > 0.0) {
            // A chunk is delivered once it would have been fully recorded.
            const double at_s = static_cast<double>(off + n) / kCanonicalRate / speed;
            std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                   std::chrono::duration<double>(at_s)));
        }
        if (stop.load()) break;
        sink(samples.subspan(off, n));
    }
}

}  // namespace breathsense
