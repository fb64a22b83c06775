#include "breathsense/metrics.hpp"

#include "breathsense/error.hpp"

namespace breathsense {

F1Report f1_score(std::span<const BinaryRow> predictions, std::span<const BinaryRow> targets, EmptyClassPolicy policy) {
    if (predictions.size() != targets.size()) throw Error(ErrorCode::ShapeMismatch, "prediction and target row counts differ");
    const std::size_t classes = targets.empty() ? (predictions.empty() ? 0 : predictions.front().size()) : targets.front().size();
    F1Report r;
    r.counts.assign(classes, {});
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (predictions[i].size() != classes || targets[i].size() != classes)
            throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(i) + " has the wrong class count");
        for (std::size_t k = 0; k < classes; ++k) {
            const bool p = predictions[i][k] != 0, t = targets[i][k] != 0;
            auto& c = r.counts[k];
            if (p && t) ++c.tp;
            else if (p) ++c.fp;
            else if (t) ++c.fn;
            else ++c.tn;
        }
    }

    std::size_t tp = 0, fp = 0, fn = 0, scored = 0;
    double sum = 0.0;
    for (const auto& c : r.counts) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
        const std::size_t denom = 2 * c.tp + c.fp + c.fn;
        const bool empty = denom == 0;
        r.empty_class.push_back(empty);
        const double f1 = empty ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
        r.per_class.push_back(f1);
        if (empty && policy == EmptyClassPolicy::Exclude) continue;
        sum += f1;
        ++scored;
    }
    r.macro = scored == 0 ? 1.0 : sum / static_cast<double>(scored);
    const std::size_t micro_denom = 2 * tp + fp + fn;
    r.micro = micro_denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(micro_denom);
    return r;
}

BinaryRow threshold_scores(std::span<const float> scores, double threshold) {
    BinaryRow row(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) row[i] = scores[i] >= threshold ? 1 : 0;
    return row;
}

}  // namespace breathsense
