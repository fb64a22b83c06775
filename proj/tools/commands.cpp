#include "commands.hpp"

#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "breathsense/audio_io.hpp"
#include "breathsense/augment.hpp"
#include "breathsense/byte_io.hpp"
#include "breathsense/dataset.hpp"
#include "breathsense/error.hpp"
#include "breathsense/features.hpp"
#include "breathsense/json_io.hpp"
#include "breathsense/service.hpp"
#include "breathsense/spectrogram.hpp"
#include "breathsense/stream.hpp"
#include "breathsense/synthetic.hpp"
#include "breathsense/training.hpp"

namespace breathsense::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) {
    g_interrupted.store(true);
}

void install_signal_handlers() {
    struct sigaction sa {};
    sa.sa_handler = on_signal;
    sigemptyset(&sa.sa_mask);
    sa.sa_flags = 0;  // no SA_RESTART: a blocking stdin read returns EINTR
    sigaction(SIGINT, &sa, nullptr);
    sigaction(SIGTERM, &sa, nullptr);
}

std::vector<FeatureKind> parse_kinds(const std::string& list) {
    std::vector<FeatureKind> kinds;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) kinds.push_back(parse_feature_kind(item));
    if (kinds.empty()) throw Error(ErrorCode::InvalidArgument, "no feature kind given");
    return kinds;
}

std::string file_stem(const std::string& path) {
    return fs::path(path).stem().string();
}

AudioClip load_canonical(const std::string& path) {
    AudioClip clip = canonicalize(read_wav(path));
    clip.source_id = path;
    return clip;
}

std::shared_ptr<const Classifier> load_model(const std::string& path, ModelRole expected) {
    if (path.empty()) throw Error(ErrorCode::InvalidArgument, std::string(role_name(expected)) + " model path is required");
    auto model = std::make_shared<const Classifier>(load_classifier(path));
    if (model->spec.role != expected)
        throw Error(ErrorCode::ModelFeatureMismatch, path + " holds a " + std::string(role_name(model->spec.role)) +
                                                         " model, expected " + std::string(role_name(expected)));
    return model;
}

std::unique_ptr<NoiseBank> load_noise(const TrainFlags& f) {
    if (f.no_augment) return nullptr;
    if (f.noise.empty()) throw Error(ErrorCode::InvalidArgument, "--noise is required unless --no-augment is given");
    AudioClip noise = load_canonical(f.noise);
    return std::make_unique<NoiseBank>(std::move(noise.samples), f.seed);
}

TrainConfig train_config(const TrainFlags& f) {
    TrainConfig cfg;
    cfg.batch_size = f.batch;
    cfg.learning_rate = f.lr;
    cfg.patience = f.patience;
    cfg.max_epochs = f.max_epochs;
    cfg.seed = f.seed;
    cfg.threshold = f.threshold;
    cfg.augment = !f.no_augment;
    return cfg;
}

Dataset load_manifest_dataset(const std::string& manifest) {
    Dataset ds = load_dataset(read_manifest(manifest));
    for (const auto& w : ds.warnings) spdlog::warn("{}", w);
    if (ds.items.empty()) throw Error(ErrorCode::EmptyDataset, "manifest yielded no labelled segments");
    return ds;
}

}  // namespace

int cmd_preprocess(const PreprocessFlags& f) {
    const auto rows = read_manifest(f.manifest);
    if (rows.empty()) throw Error(ErrorCode::EmptyManifest, f.manifest + " has no rows");
    const auto kinds = parse_kinds(f.features);
    fs::create_directories(f.out);
    std::array<std::size_t, kNumBreathClasses> counts{};
    std::size_t written = 0, failures = 0;
    for (const auto& row : rows) {
        if (row.label_path.empty()) {
            spdlog::warn("skipping unlabeled clip {}", row.clip_path);
            ++failures;
            continue;
        }
        try {
            const LabelTrack track = read_label_file(row.label_path);
            const AudioClip clip = load_canonical(row.clip_path);
            const fs::path dir = fs::path(f.out) / (row.subject + "_" + file_stem(row.clip_path));
            fs::create_directories(dir);
            std::ofstream labels(dir / "labels.tsv");
            labels << "index\tstart_s\tpause\tnose_inhale\tnose_exhale\tmouth_inhale\tmouth_exhale\n";
            const auto segments = segment_clip(clip);
            for (std::size_t i = 0; i < segments.size(); ++i) {
                char name[32];
                for (FeatureKind kind : kinds) {
                    const FeatureMatrix m = kind == FeatureKind::Mel ? mel_spectrogram(segments[i].samples) : mfcc(segments[i].samples);
                    std::snprintf(name, sizeof name, "%05zu.%s.bfm", i, std::string(feature_kind_name(kind)).c_str());
                    write_file_bytes((dir / name).string(), encode_feature_dump(m));
                    ++written;
                }
                const auto labelled = try_assign_labels(segments[i], track);
                labels << i << "\t" << segments[i].start_s;
                if (labelled) {
                    for (std::size_t k = 0; k < kNumBreathClasses; ++k) {
                        labels << "\t" << int((*labelled->labels)[k]);
                        counts[k] += (*labelled->labels)[k];
                    }
                } else {
                    labels << "\t-\t-\t-\t-\t-";
                }
                labels << "\n";
            }
            spdlog::info("{}: {} segments", row.clip_path, segments.size());
        } catch (const Error& e) {
            spdlog::error("{}: {}", row.clip_path, e.what());
            ++failures;
        }
    }
    for (std::size_t k = 0; k < counts.size(); ++k)
        std::cout << class_name(static_cast<BreathClass>(k)) << "\t" << counts[k] << "\n";
    std::cout << "feature_files\t" << written << "\n";
    if (failures) {
        spdlog::warn("{} of {} manifest rows were not processed", failures, rows.size());
        return kExitData;
    }
    return kExitOk;
}

int cmd_train(const TrainFlags& f) {
    if (f.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    const TrainConfig cfg = train_config(f);
    ModelSpec spec{parse_role(f.role), parse_feature_kind(f.features)};
    Json echo = train_config_to_json(cfg);
    echo["role"] = f.role;
    echo["features"] = f.features;
    std::cout << "config " << echo.dump() << std::endl;

    Dataset ds = load_manifest_dataset(f.manifest);
    auto subjects = ds.subjects();
    if (subjects.size() < 2)
        throw Error(ErrorCode::InsufficientSubjects, "training needs a held-out validation subject; found " + std::to_string(subjects.size()) + " subject(s)");
    std::set<std::string> val(f.val_subjects.begin(), f.val_subjects.end());
    if (val.empty()) val.insert(subjects.back());
    std::vector<LabeledSegment> train_set, val_set;
    for (auto& it : ds.items) (val.count(it.subject) ? val_set : train_set).push_back(std::move(it));
    spdlog::info("training on {} segments, validating on {} ({} subject(s))", train_set.size(), val_set.size(), val.size());

    auto noise = load_noise(f);
    Classifier model = make_classifier(spec, cfg.seed);
    const TrainResult r = train(model, train_set, val_set, cfg, noise.get(), [](const EpochStats& st) {
        spdlog::info("epoch {:3d} loss {:.4f} val macro F1 {:.4f} micro {:.4f}", st.epoch, st.train_loss, st.val_macro_f1, st.val_micro_f1);
    });
    save_classifier(f.out, model);
    Json out{{"best_epoch", r.best_epoch}, {"best_macro_f1", r.best_f1}, {"epochs_run", r.history.size()}, {"weights", f.out}};
    out["per_class_f1"] = r.best_report.per_class;
    std::cout << out.dump() << std::endl;
    return kExitOk;
}

int cmd_loocv(const TrainFlags& f) {
    if (f.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    const TrainConfig cfg = train_config(f);
    const ModelRole role = parse_role(f.role);
    const auto kinds = parse_kinds(f.features);
    Json echo = train_config_to_json(cfg);
    echo["role"] = f.role;
    echo["features"] = f.features;
    echo["jobs"] = f.jobs;
    std::cout << "config " << echo.dump() << std::endl;

    const Dataset ds = load_manifest_dataset(f.manifest);
    const auto subjects = ds.subjects();
    if (subjects.size() < 2)
        throw Error(ErrorCode::InsufficientSubjects, "LOOCV needs at least 2 subjects, found " + std::to_string(subjects.size()));
    auto noise = load_noise(f);

    fs::create_directories(f.out);
    Json report = Json::array();
    std::vector<std::pair<std::string, FoldSummary>> table;
    for (FeatureKind kind : kinds) {
        const ModelSpec spec{role, kind};
        LoocvOptions opts;
        opts.jobs = f.jobs;
        opts.on_epoch = [](const std::string& subject, const EpochStats& st) {
            spdlog::debug("[{}] epoch {} loss {:.4f} val F1 {:.4f}", subject, st.epoch, st.train_loss, st.val_macro_f1);
        };
        opts.on_fold_done = [&](const std::string& subject) { spdlog::info("{} fold for {} done", feature_kind_name(kind), subject); };
        const LoocvResult r = run_loocv(ds.items, spec, cfg, noise.get(), opts);
        const fs::path dir = fs::path(f.out) / std::string(feature_kind_name(kind));
        fs::create_directories(dir);
        for (std::size_t i = 0; i < r.folds.size(); ++i) {
            write_file_bytes((dir / ("fold_" + r.folds[i].held_out_subject + ".brw")).string(), r.weights[i]);
            std::cout << feature_kind_name(kind) << "\t" << r.folds[i].held_out_subject << "\tF1 " << r.folds[i].f1
                      << "\tbest_epoch " << r.folds[i].best_epoch << "\n";
        }
        report.push_back(loocv_to_json(r));
        table.emplace_back(std::string(feature_kind_name(kind)), r.summary);
    }
    const std::string text = format_summary_table(table);
    std::cout << text;
    std::ofstream(fs::path(f.out) / "summary.txt") << text;
    std::ofstream(fs::path(f.out) / "summary.json") << Json{{"config", echo}, {"results", report}}.dump(2) << "\n";
    return kExitOk;
}

int cmd_infer(const InferFlags& f) {
    auto channel = load_model(f.channel_model, ModelRole::Channel);
    auto phase = load_model(f.phase_model, ModelRole::Phase);
    const AudioClip clip = load_canonical(f.wav);
    PipelineConfig pc;
    pc.threshold = f.threshold;
    StreamPipeline pipeline(channel, phase, pc);
    std::ofstream file;
    if (!f.out.empty()) {
        file.open(f.out);
        if (!file) throw Error(ErrorCode::IoError, "cannot write " + f.out);
    }
    std::ostream& out = f.out.empty() ? std::cout : file;
    MetricsAggregator agg;
    for (const auto& ev : pipeline.push_samples(clip.samples)) {
        out << event_to_json(ev).dump() << "\n";
        agg.add(ev);
    }
    out << metrics_to_json(agg.metrics()).dump() << std::endl;
    return kExitOk;
}

int cmd_monitor(const MonitorFlags& f) {
    if (f.source.empty()) throw Error(ErrorCode::InvalidArgument, "--source is required");
    auto channel = load_model(f.channel_model, ModelRole::Channel);
    auto phase = load_model(f.phase_model, ModelRole::Phase);
    std::optional<ExerciseScript> script;
    if (!f.script.empty()) {
        std::ifstream in(f.script);
        if (!in) throw Error(ErrorCode::IoError, "cannot open script " + f.script);
        try {
            script = script_from_json(Json::parse(in));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "script " + f.script + ": " + e.what());
        }
    }
    AudioClip clip;
    if (f.source != "-") clip = load_canonical(f.source);

    ServiceConfig sc;
    sc.bind_address = f.bind;
    sc.port = static_cast<std::uint16_t>(f.serve < 0 ? 0 : f.serve);
    sc.log_dir = f.log_dir;
    SessionService service(sc);
    service.set_models_loaded(true);
    if (f.serve >= 0) {
        service.start();
        std::cerr << "serving on http://" << f.bind << ":" << service.port() << std::endl;
    }
    const SessionInfo info = service.start_session(script);
    std::cerr << "session " << info.session_id << " -> " << info.log_path << std::endl;

    install_signal_handlers();
    PipelineConfig pc;
    pc.threshold = f.threshold;
    AsyncStreamPipeline pipeline(channel, phase, [&](const BreathEvent& ev) {
        service.publish(ev);
        if (!f.quiet) std::cout << event_to_json(ev).dump() << std::endl;
    }, pc);

    const auto t0 = std::chrono::steady_clock::now();
    if (f.source == "-") {
        std::vector<float> buf(1600);
        std::size_t have = 0;  // bytes in buf, may end mid-sample
        while (!g_interrupted.load()) {
            auto* bytes = reinterpret_cast<char*>(buf.data());
            const ssize_t n = ::read(STDIN_FILENO, bytes + have, buf.size() * sizeof(float) - have);
            if (n <= 0) break;  // EOF, error or EINTR after a signal
            have += static_cast<std::size_t>(n);
            const std::size_t whole = have / sizeof(float);
            pipeline.push_samples(std::span<const float>(buf.data(), whole));
            const std::size_t rest = have - whole * sizeof(float);
            std::memmove(bytes, bytes + whole * sizeof(float), rest);
            have = rest;
        }
    } else {
        replay_realtime(clip.samples, [&](std::span<const float> chunk) { pipeline.push_samples(chunk); }, g_interrupted, f.speed);
    }
    pipeline.finish();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    SessionMetrics m;
    if (service.active_session()) m = service.stop_session();
    service.stop();
    std::cout << metrics_to_json(m).dump() << std::endl;
    std::cerr << "events " << pipeline.emitted() << ", dropped " << pipeline.dropped() << ", wall " << wall << " s"
              << (g_interrupted.load() ? " (interrupted)" : "") << std::endl;
    return kExitOk;
}

int cmd_spectrogram(const SpectrogramFlags& f) {
    if (f.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    const AudioClip clip = load_canonical(f.wav);
    std::optional<LabelTrack> labels;
    if (!f.labels.empty()) labels = read_label_file(f.labels, ParseOptions{true});
    const GrayImage img = render_spectrogram(clip, labels ? &*labels : nullptr);
    write_png(f.out, img);
    std::cout << f.out << "\t" << img.width << "x" << img.height << "\n";
    return kExitOk;
}

int cmd_label_assist(const LabelAssistFlags& f) {
    if (f.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    auto model = load_model(f.model, ModelRole::Labeling);
    const AudioClip clip = load_canonical(f.wav);
    const LabelTrack track = label_assist(clip, *model);
    write_label_file(f.out, track);
    std::size_t breath = 0;
    for (const auto& iv : track.intervals) breath += iv.label == BreathClass::BreathPlaceholder;
    std::cout << f.out << "\t" << track.intervals.size() << " intervals (" << breath << " breath placeholders)\n";
    return kExitOk;
}

int cmd_gen_noise(const GenNoiseFlags& f) {
    if (f.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    if (!(f.seconds >= 0.5)) throw Error(ErrorCode::InvalidArgument, "--seconds must be at least 0.5");
    AudioClip clip;
    clip.samples = generate_babble(f.seconds, f.seed);
    clip.sample_rate = kCanonicalRate;
    clip.channels = 1;
    write_wav(f.out, clip);
    std::cout << f.out << "\t" << clip.duration_s() << " s\n";
    return kExitOk;
}

int cmd_synth_data(const SynthFlags& f) {
    if (f.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    SynthStyle style;
    style.exhale_ratio = f.exhale_ratio;
    const std::string manifest = write_synthetic_dataset(f.out, f.subjects, f.clips, f.seconds, f.seed, style);
    std::cout << manifest << "\n";
    return kExitOk;
}

}  // namespace breathsense::cli
