#include "breathsense/json_io.hpp"

#include <cmath>

#include "breathsense/error.hpp"

namespace breathsense {

namespace {

[[noreturn]] void bad(const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, what);
}

template <std::size_t N>
std::array<float, N> score_array(const Json& j, const char* key) {
    if (!j.is_array() || j.size() != N) bad(std::string(key) + " must be an array of " + std::to_string(N) + " numbers");
    std::array<float, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!j[i].is_number()) bad(std::string(key) + " must contain numbers");
        out[i] = j[i].get<float>();
    }
    return out;
}

}  // namespace

Json event_to_json(const BreathEvent& ev) {
    Json j;
    j["seq"] = ev.seq;
    j["t"] = ev.t_start;
    j["decision"] = decision_name(ev.decision);
    j["stable"] = decision_name(ev.stable);
    j["channel_scores"] = ev.channel_scores;
    j["phase_scores"] = ev.phase_scores ? Json(*ev.phase_scores) : Json(nullptr);
    j["latency_ms"] = ev.latency_ms;
    return j;
}

BreathEvent event_from_json(const Json& j) {
    if (!j.is_object()) bad("event must be a JSON object");
    BreathEvent ev;
    try {
        ev.t_start = j.at("t").get<double>();
        const auto d = parse_decision(j.at("decision").get<std::string>());
        if (!d) bad("unknown decision");
        ev.decision = *d;
        ev.stable = ev.decision;
        if (j.contains("stable")) {
            const auto s = parse_decision(j.at("stable").get<std::string>());
            if (!s) bad("unknown stable decision");
            ev.stable = *s;
        }
        ev.channel_scores = score_array<3>(j.at("channel_scores"), "channel_scores");
        if (j.contains("phase_scores") && !j.at("phase_scores").is_null())
            ev.phase_scores = score_array<2>(j.at("phase_scores"), "phase_scores");
        if (j.contains("latency_ms")) ev.latency_ms = j.at("latency_ms").get<double>();
        if (j.contains("seq")) ev.seq = j.at("seq").get<std::uint64_t>();
    } catch (const Json::exception& e) {
        bad(std::string("malformed event: ") + e.what());
    }
    return ev;
}

Json metrics_to_json(const SessionMetrics& m) {
    Json j;
    j["type"] = "metrics";
    j["total_breaths"] = m.total_breaths;
    j["respiratory_rate"] = m.respiratory_rate;
    j["mean_inhale_s"] = m.mean_inhale_s;
    j["mean_exhale_s"] = m.mean_exhale_s;
    j["channel_counts"] = {{"nasal", m.nasal_breaths}, {"oral", m.oral_breaths}};
    j["events"] = m.events;
    j["compliance"] = m.compliance ? Json(*m.compliance) : Json(nullptr);
    return j;
}

SessionMetrics metrics_from_json(const Json& j) {
    SessionMetrics m;
    try {
        m.total_breaths = j.at("total_breaths").get<std::uint64_t>();
        m.respiratory_rate = j.at("respiratory_rate").get<double>();
        m.mean_inhale_s = j.at("mean_inhale_s").get<double>();
        m.mean_exhale_s = j.at("mean_exhale_s").get<double>();
        m.nasal_breaths = j.at("channel_counts").at("nasal").get<std::uint64_t>();
        m.oral_breaths = j.at("channel_counts").at("oral").get<std::uint64_t>();
        m.events = j.at("events").get<std::uint64_t>();
        if (j.contains("compliance") && !j.at("compliance").is_null()) m.compliance = j.at("compliance").get<double>();
    } catch (const Json::exception& e) {
        bad(std::string("malformed metrics: ") + e.what());
    }
    return m;
}

ExerciseScript script_from_json(const Json& j) {
    if (!j.is_array()) bad("exercise script must be a JSON array");
    ExerciseScript script;
    for (const auto& step : j) {
        ExerciseStep s;
        try {
            const auto ch = step.at("channel").get<std::string>();
            const auto ph = step.at("phase").get<std::string>();
            if (ch == "nasal") s.channel = Channel::Nasal;
            else if (ch == "oral") s.channel = Channel::Oral;
            else bad("step channel must be nasal or oral");
            if (ph == "inhale") s.phase = Phase::Inhale;
            else if (ph == "exhale") s.phase = Phase::Exhale;
            else bad("step phase must be inhale or exhale");
            s.duration_s = step.at("duration_s").get<double>();
        } catch (const Json::exception& e) {
            bad(std::string("malformed exercise step: ") + e.what());
        }
        if (!(s.duration_s > 0.0) || !std::isfinite(s.duration_s)) bad("step duration_s must be positive");
        script.push_back(s);
    }
    return script;
}

Json script_to_json(const ExerciseScript& script) {
    Json j = Json::array();
    for (const auto& s : script)
        j.push_back({{"channel", s.channel == Channel::Nasal ? "nasal" : "oral"},
                     {"phase", s.phase == Phase::Inhale ? "inhale" : "exhale"},
                     {"duration_s", s.duration_s}});
    return j;
}

Json fold_report_to_json(const FoldReport& f, const std::vector<std::string>& class_names) {
    Json per_class = Json::object(), confusion = Json::object();
    for (std::size_t k = 0; k < f.per_class_f1.size(); ++k) {
        const std::string name = k < class_names.size() ? class_names[k] : std::to_string(k);
        per_class[name] = f.per_class_f1[k];
        const auto& c = f.confusion[k];
        confusion[name] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
    }
    return {{"held_out_subject", f.held_out_subject},
            {"f1", f.f1},
            {"micro_f1", f.micro_f1},
            {"per_class_f1", per_class},
            {"confusion", confusion},
            {"best_epoch", f.best_epoch},
            {"epochs_run", f.epochs_run},
            {"train_segments", f.train_segments},
            {"validation_segments", f.validation_segments}};
}

Json summary_to_json(const FoldSummary& s) {
    return {{"avg", s.mean}, {"sd", s.sd_population}, {"sd_sample", s.sd_sample}, {"max", s.max}, {"min", s.min}};
}

Json loocv_to_json(const LoocvResult& r) {
    Json folds = Json::array();
    const auto names = role_class_names(r.spec.role);
    for (const auto& f : r.folds) folds.push_back(fold_report_to_json(f, names));
    return {{"role", role_name(r.spec.role)},
            {"features", feature_kind_name(r.spec.feature_kind)},
            {"folds", folds},
            {"summary", summary_to_json(r.summary)}};
}

Json train_config_to_json(const TrainConfig& cfg) {
    return {{"batch_size", cfg.batch_size},   {"learning_rate", cfg.learning_rate},
            {"patience", cfg.patience},       {"max_epochs", cfg.max_epochs},
            {"seed", cfg.seed},               {"augment", cfg.augment},
            {"snr_db", {cfg.snr.min_db, cfg.snr.max_db}},
            {"threshold", cfg.threshold}};
}

}  // namespace breathsense
