#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "breathsense/augment.hpp"
#include "breathsense/dataset.hpp"
#include "breathsense/metrics.hpp"
#include "breathsense/models.hpp"

namespace breathsense {

struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    int patience = 30;
    int max_epochs = 200;
    std::uint64_t seed = 0;
    bool augment = false;  // requires a NoiseBank when set
    SnrRange snr{};
    double threshold = 0.5;
    EmptyClassPolicy empty_class = EmptyClassPolicy::CountAsOne;
};

/// Patience counter over a validation metric. Epochs are 1-based; only a
/// strict improvement resets the counter.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience);

    /// Record one epoch's metric; true when it is a new best.
    bool update(double value);
    bool should_stop() const noexcept;

    int epoch() const noexcept { return epoch_; }
    int best_epoch() const noexcept { return best_epoch_; }
    double best() const noexcept { return best_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    double best_ = 0.0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
    double val_micro_f1 = 0.0;
    std::size_t train_examples = 0;  // clean + augmented
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_f1 = 0.0;
    F1Report best_report;  // validation report of the restored checkpoint
};

/// A precomputed network input and its role target vector.
struct Example {
    FeatureMatrix input;
    std::vector<float> target;
};

/// Examples for the model's role; segments outside the role's training set
/// (pause-only windows for PHASE) are skipped.
std::vector<Example> make_examples(const std::vector<LabeledSegment>& items, const ModelSpec& spec);

/// Scores thresholded into binary rows, plus the matching F1 report.
F1Report evaluate(const Classifier& model, const std::vector<Example>& examples, double threshold,
                  EmptyClassPolicy policy = EmptyClassPolicy::CountAsOne);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch Adam with early stopping on validation macro F1. The returned
/// model holds the best epoch's weights. Throws EmptyDataset when either
/// split has no usable example and DataLeakage when subjects or clips overlap.
TrainResult train(Classifier& model, const std::vector<LabeledSegment>& train_set,
                  const std::vector<LabeledSegment>& validation_set, const TrainConfig& cfg,
                  const NoiseBank* noise = nullptr, const EpochCallback& on_epoch = {});

/// Throws DataLeakage if a subject id or clip id appears in both sets.
void check_no_leakage(const std::vector<LabeledSegment>& train_set, const std::vector<LabeledSegment>& validation_set);

struct FoldReport {
    std::string held_out_subject;
    double f1 = 0.0;
    double micro_f1 = 0.0;
    std::vector<double> per_class_f1;
    std::vector<ClassCounts> confusion;  // per class TP/FP/FN/TN
    int best_epoch = 0;
    int epochs_run = 0;
    std::size_t train_segments = 0;
    std::size_t validation_segments = 0;
};

struct FoldSummary {
    double mean = 0.0;
    double sd_population = 0.0;
    double sd_sample = 0.0;  // 0 with a single fold
    double max = 0.0;
    double min = 0.0;
};

FoldSummary summarize(const std::vector<double>& scores);

struct LoocvResult {
    ModelSpec spec;
    std::vector<FoldReport> folds;
    FoldSummary summary;
    std::vector<std::vector<std::uint8_t>> weights;  // BRW1 bytes per fold
};

struct LoocvOptions {
    unsigned jobs = 1;                                    // folds trained concurrently
    std::function<void(const std::string&)> on_fold_done;  // receives the held-out subject
    std::function<void(const std::string&, const EpochStats&)> on_epoch;
};

/// One fold per subject (sorted by id); train on the rest, validate and
/// early-stop on the held-out subject. Throws InsufficientSubjects below two.
LoocvResult run_loocv(const std::vector<LabeledSegment>& items, const ModelSpec& spec, const TrainConfig& cfg,
                      const NoiseBank* noise = nullptr, const LoocvOptions& options = {});

/// "Avg (SD) / Max / Min" table text in percent.
std::string format_summary_table(const std::vector<std::pair<std::string, FoldSummary>>& rows);

/// Pre-annotate a clip with a LABELING model: each window's decision is
/// written over its central 250 ms, runs are merged, and breath runs carry
/// the placeholder code 9.
LabelTrack label_assist(const AudioClip& clip, const Classifier& labeling_model);

}  // namespace breathsense
