#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "breathsense/session_metrics.hpp"
#include "breathsense/training.hpp"

namespace breathsense {

using Json = nlohmann::json;

/// {"seq", "t", "decision", "stable", "channel_scores", "phase_scores" (null
/// on the pause path), "latency_ms"}
Json event_to_json(const BreathEvent& ev);
BreathEvent event_from_json(const Json& j);  // throws InvalidArgument

/// {"type": "metrics", ...}; the last line of a session log.
Json metrics_to_json(const SessionMetrics& m);
SessionMetrics metrics_from_json(const Json& j);

/// [{"channel": "nasal", "phase": "inhale", "duration_s": 4}, ...]
ExerciseScript script_from_json(const Json& j);
Json script_to_json(const ExerciseScript& script);

Json fold_report_to_json(const FoldReport& f, const std::vector<std::string>& class_names);
Json summary_to_json(const FoldSummary& s);
Json loocv_to_json(const LoocvResult& r);

Json train_config_to_json(const TrainConfig& cfg);

}  // namespace breathsense
