#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace breathsense::cli {

// Stable exit codes for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

struct TrainFlags {
    std::string manifest;
    std::string role = "channel";
    std::string features = "mel";
    std::string out;
    std::size_t batch = 32;
    double lr = 1e-3;
    int patience = 30;
    int max_epochs = 200;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    std::string noise;
    bool no_augment = false;
    std::vector<std::string> val_subjects;  // train only
    unsigned jobs = 1;                      // loocv only
};

struct PreprocessFlags {
    std::string manifest;
    std::string out;
    std::string features = "mel";
};

struct InferFlags {
    std::string wav;
    std::string channel_model;
    std::string phase_model;
    double threshold = 0.5;
    std::string out;  // empty: stdout
};

struct MonitorFlags {
    std::string source;  // WAV path, or "-" for raw float32 LE samples on stdin
    std::string channel_model;
    std::string phase_model;
    double threshold = 0.5;
    int serve = -1;  // port; -1 disables the service
    std::string bind = "127.0.0.1";
    std::string log_dir = "sessions";
    std::string script;  // exercise script JSON file
    double speed = 1.0;
    bool quiet = false;
};

struct SpectrogramFlags {
    std::string wav;
    std::string out;
    std::string labels;
};

struct LabelAssistFlags {
    std::string wav;
    std::string model;
    std::string out;
};

struct GenNoiseFlags {
    std::string out;
    double seconds = 120.0;
    std::uint64_t seed = 7;
};

struct SynthFlags {
    std::string out;
    int subjects = 2;
    int clips = 2;
    double seconds = 30.0;
    std::uint64_t seed = 1;
    double exhale_ratio = 1.6;
};

int cmd_preprocess(const PreprocessFlags& f);
int cmd_train(const TrainFlags& f);
int cmd_loocv(const TrainFlags& f);
int cmd_infer(const InferFlags& f);
int cmd_monitor(const MonitorFlags& f);
int cmd_spectrogram(const SpectrogramFlags& f);
int cmd_label_assist(const LabelAssistFlags& f);
int cmd_gen_noise(const GenNoiseFlags& f);
int cmd_synth_data(const SynthFlags& f);

}  // namespace breathsense::cli
