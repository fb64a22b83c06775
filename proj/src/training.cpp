#include "breathsense/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "breathsense/error.hpp"
#include "breathsense/nn/adam.hpp"
#include "breathsense/nn/loss.hpp"

namespace breathsense {

EarlyStopper::EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw Error(ErrorCode::InvalidArgument, "patience must be at least 1");
}

bool EarlyStopper::update(double value) {
    ++epoch_;
    if (best_epoch_ == 0 || value > best_) {
        best_ = value;
        best_epoch_ = epoch_;
        return true;
    }
    return false;
}

bool EarlyStopper::should_stop() const noexcept {
    return best_epoch_ > 0 && epoch_ - best_epoch_ >= patience_;
}

namespace {

// Examples plus the segment each one came from (needed for augmentation).
struct ExampleSet {
    std::vector<Example> examples;
    std::vector<const LabeledSegment*> sources;
};

ExampleSet build_examples(const std::vector<const LabeledSegment*>& items, const ModelSpec& spec) {
    ExampleSet out;
    for (const LabeledSegment* it : items) {
        auto target = role_targets(spec.role, *it->segment.labels);
        if (!target) continue;
        out.examples.push_back({model_input(it->segment.samples, spec.feature_kind), std::move(*target)});
        out.sources.push_back(it);
    }
    return out;
}

std::vector<const LabeledSegment*> pointers(const std::vector<LabeledSegment>& v) {
    std::vector<const LabeledSegment*> p;
    p.reserve(v.size());
    for (const auto& x : v) p.push_back(&x);
    return p;
}

void check_disjoint(const std::vector<const LabeledSegment*>& a, const std::vector<const LabeledSegment*>& b) {
    std::set<std::string> subjects, clips;
    for (const auto* x : a) {
        subjects.insert(x->subject);
        clips.insert(x->segment.clip_id);
    }
    for (const auto* x : b) {
        if (subjects.count(x->subject))
            throw Error(ErrorCode::DataLeakage, "subject '" + x->subject + "' is in both training and validation sets");
        if (clips.count(x->segment.clip_id))
            throw Error(ErrorCode::DataLeakage, "clip '" + x->segment.clip_id + "' contributes to both sets");
    }
}

F1Report evaluate_ptrs(const Classifier& model, const std::vector<const Example*>& examples, double threshold,
                       EmptyClassPolicy policy) {
    constexpr std::size_t kChunk = 64;
    std::vector<BinaryRow> preds, targets;
    preds.reserve(examples.size());
    targets.reserve(examples.size());
    const std::size_t classes = model.spec.out_classes();
    for (std::size_t start = 0; start < examples.size(); start += kChunk) {
        const std::size_t end = std::min(examples.size(), start + kChunk);
        std::vector<const FeatureMatrix*> inputs;
        for (std::size_t i = start; i < end; ++i) inputs.push_back(&examples[i]->input);
        const auto p = model.net.predict(to_batch(inputs));
        for (std::size_t i = start; i < end; ++i) {
            preds.push_back(threshold_scores(std::span<const float>(p.data).subspan((i - start) * classes, classes), threshold));
            targets.push_back(threshold_scores(examples[i]->target, 0.5));
        }
    }
    return f1_score(preds, targets, policy);
}

TrainResult train_core(Classifier& model, const std::vector<const Example*>& train_ex,
                       const std::vector<const LabeledSegment*>& train_src, const std::vector<const Example*>& val_ex,
                       const TrainConfig& cfg, const NoiseBank* noise, const EpochCallback& on_epoch) {
    if (train_ex.empty()) throw Error(ErrorCode::EmptyDataset, "no training examples for the " + std::string(role_name(model.spec.role)) + " role");
    if (val_ex.empty()) throw Error(ErrorCode::EmptyDataset, "no validation examples for the " + std::string(role_name(model.spec.role)) + " role");
    if (cfg.augment && !noise) throw Error(ErrorCode::InvalidArgument, "augmentation requested without a noise bank");
    if (cfg.batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
    if (cfg.max_epochs < 1) throw Error(ErrorCode::InvalidArgument, "max_epochs must be at least 1");

    Rng rng(cfg.seed);
    nn::Adam<float> opt(nn::AdamConfig{cfg.learning_rate});
    const auto params = model.net.parameters();
    EarlyStopper stopper(cfg.patience);
    nn::WeightStore best = nn::save_weights(model.net);
    TrainResult result;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<const Example*> pool = train_ex;
        std::vector<Example> augmented;
        if (cfg.augment) {
            augmented.reserve(train_ex.size());
            for (std::size_t i = 0; i < train_ex.size(); ++i) {
                try {
                    const double snr = sample_snr(rng, cfg.snr);
                    Segment mixed = mix_noise(train_src[i]->segment, *noise, snr, rng);
                    augmented.push_back({model_input(mixed.samples, model.spec.feature_kind), train_ex[i]->target});
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::SilentSignal && e.code() != ErrorCode::SilentNoiseSlice) throw;
                }
            }
            for (const auto& a : augmented) pool.push_back(&a);
        }
        shuffle_in_place(pool, rng);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(pool.size(), start + cfg.batch_size);
            std::vector<const FeatureMatrix*> inputs;
            std::vector<float> targets;
            for (std::size_t i = start; i < end; ++i) {
                inputs.push_back(&pool[i]->input);
                targets.insert(targets.end(), pool[i]->target.begin(), pool[i]->target.end());
            }
            model.net.zero_grad();
            const nn::Tensor<float> probs = model.net.forward(to_batch(inputs), true);
            auto bce = nn::bce_loss<float>(probs.data, targets);
            nn::Tensor<float> g;
            g.shape = probs.shape;
            g.data = std::move(bce.grad_logits);
            model.net.backward_from_logits(g);
            opt.step(params);
            loss_sum += bce.loss;
            ++batches;
        }

        const F1Report rep = evaluate_ptrs(model, val_ex, cfg.threshold, cfg.empty_class);
        EpochStats st{epoch, loss_sum / static_cast<double>(batches), rep.macro, rep.micro, pool.size()};
        result.history.push_back(st);
        if (stopper.update(rep.macro)) best = nn::save_weights(model.net);
        if (on_epoch) on_epoch(st);
        if (stopper.should_stop()) break;
    }

    nn::load_weights(model.net, best);
    result.best_epoch = stopper.best_epoch();
    result.best_f1 = stopper.best();
    result.best_report = evaluate_ptrs(model, val_ex, cfg.threshold, cfg.empty_class);
    return result;
}

std::vector<const Example*> example_ptrs(const std::vector<Example>& v) {
    std::vector<const Example*> p;
    for (const auto& e : v) p.push_back(&e);
    return p;
}

}  // namespace

std::vector<Example> make_examples(const std::vector<LabeledSegment>& items, const ModelSpec& spec) {
    return build_examples(pointers(items), spec).examples;
}

F1Report evaluate(const Classifier& model, const std::vector<Example>& examples, double threshold, EmptyClassPolicy policy) {
    return evaluate_ptrs(model, example_ptrs(examples), threshold, policy);
}

void check_no_leakage(const std::vector<LabeledSegment>& train_set, const std::vector<LabeledSegment>& validation_set) {
    check_disjoint(pointers(train_set), pointers(validation_set));
}

TrainResult train(Classifier& model, const std::vector<LabeledSegment>& train_set,
                  const std::vector<LabeledSegment>& validation_set, const TrainConfig& cfg, const NoiseBank* noise,
                  const EpochCallback& on_epoch) {
    const auto tr = pointers(train_set), va = pointers(validation_set);
    check_disjoint(tr, va);
    const ExampleSet train_ex = build_examples(tr, model.spec);
    const ExampleSet val_ex = build_examples(va, model.spec);
    return train_core(model, example_ptrs(train_ex.examples), train_ex.sources, example_ptrs(val_ex.examples), cfg, noise,
                      on_epoch);
}

FoldSummary summarize(const std::vector<double>& scores) {
    FoldSummary s;
    if (scores.empty()) return s;
    const double n = static_cast<double>(scores.size());
    double sum = 0.0;
    for (double v : scores) sum += v;
    s.mean = sum / n;
    double ss = 0.0;
    for (double v : scores) ss += (v - s.mean) * (v - s.mean);
    s.sd_population = std::sqrt(ss / n);
    s.sd_sample = scores.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.max = *std::max_element(scores.begin(), scores.end());
    s.min = *std::min_element(scores.begin(), scores.end());
    return s;
}

LoocvResult run_loocv(const std::vector<LabeledSegment>& items, const ModelSpec& spec, const TrainConfig& cfg,
                      const NoiseBank* noise, const LoocvOptions& options) {
    std::set<std::string> subject_set;
    for (const auto& it : items) subject_set.insert(it.subject);
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
    if (subjects.size() < 2)
        throw Error(ErrorCode::InsufficientSubjects, "LOOCV needs at least 2 subjects, found " + std::to_string(subjects.size()));

    // Features are computed once and shared read-only by every fold.
    const ExampleSet all = build_examples(pointers(items), spec);

    LoocvResult result;
    result.spec = spec;
    result.folds.resize(subjects.size());
    result.weights.resize(subjects.size());
    std::vector<std::exception_ptr> errors(subjects.size());
    std::mutex cb_mutex;

    auto run_fold = [&](std::size_t f) {
        const std::string& held = subjects[f];
        std::vector<const Example*> tr_ex, va_ex;
        std::vector<const LabeledSegment*> tr_src, va_src;
        for (std::size_t i = 0; i < all.examples.size(); ++i) {
            if (all.sources[i]->subject == held) {
                va_ex.push_back(&all.examples[i]);
                va_src.push_back(all.sources[i]);
            } else {
                tr_ex.push_back(&all.examples[i]);
                tr_src.push_back(all.sources[i]);
            }
        }
        check_disjoint(tr_src, va_src);
        Classifier model = make_classifier(spec, cfg.seed);
        EpochCallback cb;
        if (options.on_epoch)
            cb = [&](const EpochStats& st) {
                std::lock_guard lock(cb_mutex);
                options.on_epoch(held, st);
            };
        const TrainResult tr = train_core(model, tr_ex, tr_src, va_ex, cfg, noise, cb);
        FoldReport& rep = result.folds[f];
        rep.held_out_subject = held;
        rep.f1 = tr.best_report.macro;
        rep.micro_f1 = tr.best_report.micro;
        rep.per_class_f1 = tr.best_report.per_class;
        rep.confusion = tr.best_report.counts;
        rep.best_epoch = tr.best_epoch;
        rep.epochs_run = static_cast<int>(tr.history.size());
        rep.train_segments = tr_ex.size();
        rep.validation_segments = va_ex.size();
        result.weights[f] = serialize_classifier(model);
        if (options.on_fold_done) {
            std::lock_guard lock(cb_mutex);
            options.on_fold_done(held);
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(subjects.size())));
    if (jobs == 1) {
        for (std::size_t f = 0; f < subjects.size(); ++f) run_fold(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (std::size_t f; (f = next.fetch_add(1)) < subjects.size();) {
                    try {
                        run_fold(f);
                    } catch (...) {
                        errors[f] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::vector<double> scores;
    for (const auto& f : result.folds) scores.push_back(f.f1);
    result.summary = summarize(scores);
    return result;
}

std::string format_summary_table(const std::vector<std::pair<std::string, FoldSummary>>& rows) {
    std::string out = "input        Avg (SD)         Max      Min      SD(sample)\n";
    char line[160];
    for (const auto& [name, s] : rows) {
        std::snprintf(line, sizeof line, "%-12s %6.2f (%5.2f)   %6.2f   %6.2f   %5.2f\n", name.c_str(), 100 * s.mean,
                      100 * s.sd_population, 100 * s.max, 100 * s.min, 100 * s.sd_sample);
        out += line;
    }
    return out;
}

LabelTrack label_assist(const AudioClip& clip, const Classifier& labeling_model) {
    if (labeling_model.spec.role != ModelRole::Labeling)
        throw Error(ErrorCode::InvalidArgument, "label assist needs a labeling model, got " + std::string(role_name(labeling_model.spec.role)));
    const auto segments = segment_clip(clip);
    const double duration = clip.duration_s();
    LabelTrack track;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const auto s = labeling_model.scores(model_input(segments[k].samples, labeling_model.spec.feature_kind));
        const BreathClass c = s[1] > s[0] ? BreathClass::BreathPlaceholder : BreathClass::Pause;
        // Window k covers [0.25k, 0.25k + 0.5); it owns the central quarter.
        const double start = k == 0 ? 0.0 : kStrideSeconds * static_cast<double>(k) + 0.125;
        const double end = k + 1 == segments.size() ? duration : kStrideSeconds * static_cast<double>(k) + 0.375;
        if (!track.intervals.empty() && track.intervals.back().label == c)
            track.intervals.back().end_s = end;
        else
            track.intervals.push_back({start, end, c});
    }
    return track;
}

}  // namespace breathsense
