#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "breathsense/error.hpp"
#include "commands.hpp"

#ifndef BREATHSENSE_DATA_DIR
#define BREATHSENSE_DATA_DIR "data"
#endif

using namespace breathsense;
using namespace breathsense::cli;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return kExitUsage;
        case ErrorCode::PortInUse:
        case ErrorCode::SessionAlreadyActive:
        case ErrorCode::NoActiveSession:
        case ErrorCode::StaleCache:
        case ErrorCode::DegenerateBatch:
        case ErrorCode::DataLeakage:
        case ErrorCode::ShapeMismatch: return kExitRuntime;
        default: return kExitData;
    }
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("breathsense");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* lvl = std::getenv("BREATHSENSE_LOG")) spdlog::cfg::helpers::load_levels(lvl);
}

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool loocv) {
    cmd->add_option("--manifest", f.manifest, "Dataset manifest (TSV: clip, subject, session, labels, exercise tag)")->required();
    cmd->add_option("--role", f.role, "Classifier: channel | phase | labeling")
        ->check(CLI::IsMember({"channel", "phase", "labeling"}));
    cmd->add_option("--features", f.features,
                    loocv ? "Feature kinds, comma separated: mel, mfcc or mel,mfcc" : "Feature kind: mel | mfcc");
    cmd->add_option("--out", f.out, loocv ? "Output directory for fold weights and summaries" : "Output BRW1 weight file")->required();
    cmd->add_option("--batch", f.batch, "Minibatch size")->check(CLI::PositiveNumber);
    cmd->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--patience", f.patience, "Early stopping patience in epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--max-epochs", f.max_epochs, "Upper bound on epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Seed for initialisation, shuffling and augmentation");
    cmd->add_option("--threshold", f.threshold, "Sigmoid decision threshold for validation F1")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--noise", f.noise, "Background noise WAV for augmentation");
    cmd->add_flag("--no-augment", f.no_augment, "Disable noise augmentation");
    if (loocv)
        cmd->add_option("--jobs", f.jobs, "Folds trained in parallel")->check(CLI::PositiveNumber);
    else
        cmd->add_option("--val-subject", f.val_subjects, "Validation subject id (repeatable; default: last subject)");
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"breathsense: breathing channel and phase detection toolkit"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", "breathsense 0.1.0");

    PreprocessFlags pre;
    auto* c_pre = app.add_subcommand("preprocess", "Segment clips and dump features (BFM1) and label vectors");
    c_pre->add_option("--manifest", pre.manifest, "Dataset manifest")->required();
    c_pre->add_option("--out", pre.out, "Output directory")->required();
    c_pre->add_option("--features", pre.features, "Feature kinds, comma separated: mel, mfcc or mel,mfcc");

    TrainFlags tr;
    tr.noise = std::string(BREATHSENSE_DATA_DIR) + "/babble_noise.wav";
    auto* c_train = app.add_subcommand("train", "Train one classifier with a held-out validation subject");
    add_train_flags(c_train, tr, false);

    TrainFlags lo;
    lo.noise = tr.noise;
    auto* c_loocv = app.add_subcommand("loocv", "Leave-one-subject-out cross-validation");
    add_train_flags(c_loocv, lo, true);

    InferFlags inf;
    auto* c_infer = app.add_subcommand("infer", "Classify a WAV file; JSON-lines events then a metrics object");
    c_infer->add_option("wav", inf.wav, "Input WAV")->required();
    c_infer->add_option("--channel-model", inf.channel_model, "Channel classifier weights")->required();
    c_infer->add_option("--phase-model", inf.phase_model, "Phase classifier weights")->required();
    c_infer->add_option("--threshold", inf.threshold, "Cascade decision threshold")->check(CLI::Range(0.0, 1.0));
    c_infer->add_option("--out", inf.out, "Write events here instead of stdout");

    MonitorFlags mon;
    auto* c_mon = app.add_subcommand("monitor", "Live session from a real-time replay or a raw sample pipe");
    c_mon->add_option("--source", mon.source, "WAV to replay in real time, or - for raw float32 LE 16 kHz mono on stdin")->required();
    c_mon->add_option("--channel-model", mon.channel_model, "Channel classifier weights")->required();
    c_mon->add_option("--phase-model", mon.phase_model, "Phase classifier weights")->required();
    c_mon->add_option("--threshold", mon.threshold, "Cascade decision threshold")->check(CLI::Range(0.0, 1.0));
    c_mon->add_option("--serve", mon.serve, "Serve HTTP + WebSocket on this port (-1: off, 0: any free port)")
        ->check(CLI::Range(-1, 65535));
    c_mon->add_option("--bind", mon.bind, "Service bind address");
    c_mon->add_option("--log-dir", mon.log_dir, "Directory for <session_id>.jsonl logs");
    c_mon->add_option("--script", mon.script, "Exercise script JSON for compliance scoring");
    c_mon->add_option("--speed", mon.speed, "Replay speed factor (0: as fast as possible)")->check(CLI::Range(0.0, 1000.0));
    c_mon->add_flag("--quiet", mon.quiet, "Do not echo events to stdout");

    SpectrogramFlags sp;
    auto* c_spec = app.add_subcommand("spectrogram", "Render a log-mel spectrogram PNG");
    c_spec->add_option("wav", sp.wav, "Input WAV")->required();
    c_spec->add_option("--out", sp.out, "Output PNG")->required();
    c_spec->add_option("--labels", sp.labels, "Label track whose interval edges are overlaid");

    LabelAssistFlags la;
    auto* c_la = app.add_subcommand("label-assist", "Pre-annotate pause/breath intervals (breath = code 9)");
    c_la->add_option("wav", la.wav, "Input WAV")->required();
    c_la->add_option("--model", la.model, "Labeling classifier weights")->required();
    c_la->add_option("--out", la.out, "Output label track")->required();

    GenNoiseFlags gn;
    auto* c_gn = app.add_subcommand("gen-noise", "Generate a synthetic babble noise WAV for augmentation");
    c_gn->add_option("--out", gn.out, "Output WAV")->required();
    c_gn->add_option("--seconds", gn.seconds, "Duration");
    c_gn->add_option("--seed", gn.seed, "Generator seed");

    SynthFlags sy;
    auto* c_sy = app.add_subcommand("synth-data", "Write a synthetic labelled dataset with a manifest");
    c_sy->add_option("--out", sy.out, "Output directory")->required();
    c_sy->add_option("--subjects", sy.subjects, "Number of subjects")->check(CLI::PositiveNumber);
    c_sy->add_option("--clips", sy.clips, "Clips per subject")->check(CLI::PositiveNumber);
    c_sy->add_option("--seconds", sy.seconds, "Approximate clip length")->check(CLI::PositiveNumber);
    c_sy->add_option("--seed", sy.seed, "Generator seed");
    c_sy->add_option("--exhale-ratio", sy.exhale_ratio, "Exhale band center relative to inhale")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_pre) return cmd_preprocess(pre);
        if (*c_train) return cmd_train(tr);
        if (*c_loocv) return cmd_loocv(lo);
        if (*c_infer) return cmd_infer(inf);
        if (*c_mon) return cmd_monitor(mon);
        if (*c_spec) return cmd_spectrogram(sp);
        if (*c_la) return cmd_label_assist(la);
        if (*c_gn) return cmd_gen_noise(gn);
        if (*c_sy) return cmd_synth_data(sy);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
