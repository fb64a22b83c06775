#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "breathsense/features.hpp"
#include "breathsense/labels.hpp"
#include "breathsense/nn/model.hpp"
#include "breathsense/nn/weights.hpp"

namespace breathsense {

/// CHANNEL: pause / nasal / oral. PHASE: inhale / exhale.
/// LABELING: pause / breath (the pre-annotation helper).
enum class ModelRole : std::uint8_t { Channel = 0, Phase = 1, Labeling = 2 };

std::string_view role_name(ModelRole role) noexcept;
ModelRole parse_role(std::string_view name);
std::size_t role_classes(ModelRole role) noexcept;
std::vector<std::string> role_class_names(ModelRole role);

struct ModelSpec {
    ModelRole role = ModelRole::Channel;
    FeatureKind feature_kind = FeatureKind::Mel;
    std::vector<std::size_t> dense_widths{256, 128, 64};  // hidden widths before the output layer

    std::size_t out_classes() const noexcept { return role_classes(role); }
    std::vector<std::size_t> conv_filters() const;
    nn::Shape3 input_shape() const;

    bool operator==(const ModelSpec&) const = default;
};

/// Conv blocks (Conv3x3 -> BatchNorm -> ReLU -> MaxPool2x2), Flatten,
/// ReLU-separated dense layers, sigmoid head. Kaiming-uniform init from seed.
template <typename T>
nn::Model<T> build_model(const ModelSpec& spec, std::uint64_t seed);

/// Closed-form trainable parameter count for a spec.
std::size_t expected_parameter_count(const ModelSpec& spec);

/// Map five-class ground truth onto a role's target vector. Returns nullopt
/// when the segment does not belong to the role's training set (pause-only
/// windows for PHASE).
std::optional<std::vector<float>> role_targets(ModelRole role, const LabelVector& labels);

/// A model together with its spec; the unit the CLI and stream pipeline load.
struct Classifier {
    ModelSpec spec;
    nn::Model<float> net;

    /// Sigmoid scores for one network input. Throws ModelFeatureMismatch when
    /// the features are of the wrong kind or shape.
    std::vector<float> scores(const FeatureMatrix& input) const;
};

Classifier make_classifier(const ModelSpec& spec, std::uint64_t seed);

/// BRW1 store holding the weights plus a "__spec__" metadata entry.
std::vector<std::uint8_t> serialize_classifier(Classifier& c);
Classifier deserialize_classifier(std::span<const std::uint8_t> bytes);

void save_classifier(const std::string& path, Classifier& c);
Classifier load_classifier(const std::string& path);

/// Pack feature matrices into a (batch, 1, rows, cols) tensor.
nn::Tensor<float> to_batch(std::span<const FeatureMatrix* const> inputs);

}  // namespace breathsense
