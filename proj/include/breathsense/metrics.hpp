#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace breathsense {

/// Multilabel confusion counts for one class.
struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
};

enum class EmptyClassPolicy {
    CountAsOne,  // no positives in predictions or targets: F1 = 1
    Exclude,     // drop such classes from the macro average
};

struct F1Report {
    double macro = 0.0;
    double micro = 0.0;
    std::vector<double> per_class;
    std::vector<ClassCounts> counts;
    std::vector<bool> empty_class;  // flagged classes (no positives anywhere)
};

using BinaryRow = std::vector<std::uint8_t>;

/// Per class F1 = 2TP / (2TP + FP + FN); macro = unweighted class mean.
F1Report f1_score(std::span<const BinaryRow> predictions, std::span<const BinaryRow> targets,
                  EmptyClassPolicy policy = EmptyClassPolicy::CountAsOne);

BinaryRow threshold_scores(std::span<const float> scores, double threshold = 0.5);

}  // namespace breathsense
