#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "breathsense/stream.hpp"

namespace breathsense {

struct SessionMetrics {
    std::uint64_t total_breaths = 0;
    double respiratory_rate = 0.0;  // breaths completed in the trailing 60 s
    double mean_inhale_s = 0.0;
    double mean_exhale_s = 0.0;
    std::uint64_t nasal_breaths = 0;
    std::uint64_t oral_breaths = 0;
    std::uint64_t events = 0;
    std::optional<double> compliance;

    bool operator==(const SessionMetrics&) const = default;
};

/// Incremental breath counter over a stabilized decision stream. A breath is
/// an inhale run (any channel) immediately followed by an exhale run; it is
/// complete when the exhale run ends or the stream ends. The breath's channel
/// is the majority channel of its inhale run (nasal on a tie).
class MetricsAggregator {
public:
    static constexpr double kRateWindowS = 60.0;

    void add(double t_start, Decision stable);
    void add(const BreathEvent& ev) { add(ev.t_start, ev.stable); }

    /// Snapshot treating the open run as closed at the stream end.
    SessionMetrics metrics() const;

private:
    struct Run {
        std::optional<Phase> phase;
        std::uint64_t length = 0;
        std::uint64_t nasal = 0;
        std::uint64_t oral = 0;
        double end_t = 0.0;  // t_start of the last event + stride
    };

    struct Totals {
        std::uint64_t inhale_runs = 0, exhale_runs = 0;
        std::uint64_t inhale_slots = 0, exhale_slots = 0;
        std::uint64_t nasal = 0, oral = 0;
        std::vector<double> completions;  // breath completion times
        std::optional<Run> last_inhale;   // the run right before the current one, if it was an inhale
    };

    static void close_run(const Run& run, Totals& totals);

    Run current_;
    Totals totals_;
    std::uint64_t events_ = 0;
    double end_t_ = 0.0;
};

/// Convenience: aggregate a whole stream at once.
SessionMetrics aggregate(const std::vector<BreathEvent>& events);

struct ExerciseStep {
    Channel channel = Channel::Nasal;
    Phase phase = Phase::Inhale;
    double duration_s = 0.0;

    bool operator==(const ExerciseStep&) const = default;
};

using ExerciseScript = std::vector<ExerciseStep>;

/// Per-step match accounting. Step i covers [sum of earlier durations, + its
/// duration) measured from the first event's t_start; an event belongs to
/// the step containing its t_start. A step with events is compliant when at
/// least `threshold` of them match; the score is compliant / scored steps.
class ComplianceTracker {
public:
    explicit ComplianceTracker(ExerciseScript script, double threshold = 0.7);

    void add(double t_start, Decision stable);
    std::optional<double> score() const;  // nullopt before any step has events

    struct StepState {
        std::uint64_t events = 0;
        std::uint64_t matched = 0;
    };
    const std::vector<StepState>& steps() const noexcept { return steps_; }
    bool step_compliant(std::size_t i) const;

private:
    ExerciseScript script_;
    double threshold_;
    std::vector<double> step_start_;
    std::vector<StepState> steps_;
    std::optional<double> t0_;
};

}  // namespace breathsense
