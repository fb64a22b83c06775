#include "breathsense/session_metrics.hpp"

#include <algorithm>

#include "breathsense/error.hpp"

namespace breathsense {

void MetricsAggregator::add(double t_start, Decision stable) {
    ++events_;
    end_t_ = t_start + kStrideSeconds;
    const auto phase = decision_phase(stable);
    if (current_.length == 0 || current_.phase != phase) {
        if (current_.length > 0) close_run(current_, totals_);
        current_ = Run{phase};
    }
    ++current_.length;
    if (auto ch = decision_channel(stable)) ++(*ch == Channel::Nasal ? current_.nasal : current_.oral);
    current_.end_t = end_t_;
}

void MetricsAggregator::close_run(const Run& run, Totals& t) {
    if (run.phase == Phase::Inhale) {
        ++t.inhale_runs;
        t.inhale_slots += run.length;
        t.last_inhale = run;
        return;
    }
    if (run.phase == Phase::Exhale) {
        ++t.exhale_runs;
        t.exhale_slots += run.length;
        if (t.last_inhale) {
            t.completions.push_back(run.end_t);
            ++(t.last_inhale->oral > t.last_inhale->nasal ? t.oral : t.nasal);
        }
    }
    t.last_inhale.reset();
}

SessionMetrics MetricsAggregator::metrics() const {
    Totals t = totals_;
    if (current_.length > 0) close_run(current_, t);
    SessionMetrics m;
    m.events = events_;
    m.total_breaths = t.completions.size();
    m.nasal_breaths = t.nasal;
    m.oral_breaths = t.oral;
    if (t.inhale_runs) m.mean_inhale_s = kStrideSeconds * static_cast<double>(t.inhale_slots) / static_cast<double>(t.inhale_runs);
    if (t.exhale_runs) m.mean_exhale_s = kStrideSeconds * static_cast<double>(t.exhale_slots) / static_cast<double>(t.exhale_runs);
    const double from = end_t_ - kRateWindowS - 1e-9;
    m.respiratory_rate = static_cast<double>(
        std::count_if(t.completions.begin(), t.completions.end(), [&](double c) { return c >= from; }));
    return m;
}

SessionMetrics aggregate(const std::vector<BreathEvent>& events) {
    MetricsAggregator agg;
    for (const auto& ev : events) agg.add(ev);
    return agg.metrics();
}

ComplianceTracker::ComplianceTracker(ExerciseScript script, double threshold)
    : script_(std::move(script)), threshold_(threshold), steps_(script_.size()) {
    if (threshold < 0.0 || threshold > 1.0) throw Error(ErrorCode::InvalidArgument, "compliance threshold must be in [0, 1]");
    double at = 0.0;
    for (const auto& s : script_) {
        if (!(s.duration_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "exercise step durations must be positive");
        step_start_.push_back(at);
        at += s.duration_s;
    }
}

void ComplianceTracker::add(double t_start, Decision stable) {
    if (script_.empty()) return;
    if (!t0_) t0_ = t_start;
    const double rel = t_start - *t0_;
    auto it = std::upper_bound(step_start_.begin(), step_start_.end(), rel + 1e-9);
    if (it == step_start_.begin()) return;
    const std::size_t i = static_cast<std::size_t>(it - step_start_.begin()) - 1;
    if (rel >= step_start_[i] + script_[i].duration_s - 1e-9) return;  // past the script end
    ++steps_[i].events;
    if (stable == make_decision(script_[i].channel, script_[i].phase)) ++steps_[i].matched;
}

bool ComplianceTracker::step_compliant(std::size_t i) const {
    const auto& s = steps_.at(i);
    return s.events > 0 && static_cast<double>(s.matched) >= threshold_ * static_cast<double>(s.events) - 1e-9;
}

std::optional<double> ComplianceTracker::score() const {
    std::size_t scored = 0, ok = 0;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (steps_[i].events == 0) continue;
        ++scored;
        if (step_compliant(i)) ++ok;
    }
    if (scored == 0) return std::nullopt;
    return static_cast<double>(ok) / static_cast<double>(scored);
}

}  // namespace breathsense
