#include "breathsense/models.hpp"

#include <cmath>

#include "breathsense/byte_io.hpp"
#include "breathsense/error.hpp"

namespace breathsense {

std::string_view role_name(ModelRole role) noexcept {
    switch (role) {
        case ModelRole::Channel: return "channel";
        case ModelRole::Phase: return "phase";
        case ModelRole::Labeling: return "labeling";
    }
    return "unknown";
}

ModelRole parse_role(std::string_view name) {
    if (name == "channel") return ModelRole::Channel;
    if (name == "phase") return ModelRole::Phase;
    if (name == "labeling") return ModelRole::Labeling;
    throw Error(ErrorCode::InvalidArgument, "role must be channel, phase or labeling");
}

std::size_t role_classes(ModelRole role) noexcept {
    return role == ModelRole::Channel ? 3 : 2;
}

std::vector<std::string> role_class_names(ModelRole role) {
    switch (role) {
        case ModelRole::Channel: return {"pause", "nasal", "oral"};
        case ModelRole::Phase: return {"inhale", "exhale"};
        case ModelRole::Labeling: return {"pause", "breath"};
    }
    return {};
}

std::vector<std::size_t> ModelSpec::conv_filters() const {
    if (role == ModelRole::Phase) return {4};
    return {8, 16, 32};
}

nn::Shape3 ModelSpec::input_shape() const {
    const auto [rows, cols] = feature_shape(feature_kind);
    return {1, rows, cols};
}

template <typename T>
nn::Model<T> build_model(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    nn::Model<T> model(spec.input_shape());
    std::size_t channels = 1;
    for (std::size_t filters : spec.conv_filters()) {
        model.template add<nn::Conv2D<T>>(channels, filters).init_kaiming(rng);
        model.template add<nn::BatchNorm2D<T>>(filters);
        model.template add<nn::ReLU<T>>();
        model.template add<nn::MaxPool2D<T>>();
        channels = filters;
    }
    model.template add<nn::Flatten<T>>();
    std::size_t width = model.output_shape()[0];
    for (std::size_t hidden : spec.dense_widths) {
        model.template add<nn::Dense<T>>(width, hidden).init_kaiming(rng);
        model.template add<nn::ReLU<T>>();
        width = hidden;
    }
    model.template add<nn::Dense<T>>(width, spec.out_classes()).init_kaiming(rng);
    model.template add<nn::Sigmoid<T>>();
    return model;
}

template nn::Model<float> build_model<float>(const ModelSpec&, std::uint64_t);
template nn::Model<double> build_model<double>(const ModelSpec&, std::uint64_t);

std::size_t expected_parameter_count(const ModelSpec& spec) {
    auto [c, h, w] = spec.input_shape();
    std::size_t total = 0;
    for (std::size_t f : spec.conv_filters()) {
        total += f * c * 9 + f;  // conv
        total += 2 * f;          // batch-norm gamma, beta
        c = f;
        h /= 2;
        w /= 2;
    }
    std::size_t width = c * h * w;
    for (std::size_t hidden : spec.dense_widths) {
        total += width * hidden + hidden;
        width = hidden;
    }
    total += width * spec.out_classes() + spec.out_classes();
    return total;
}

std::optional<std::vector<float>> role_targets(ModelRole role, const LabelVector& l) {
    const bool pause = l[0] != 0;
    const bool nose_in = l[1] != 0, nose_out = l[2] != 0, mouth_in = l[3] != 0, mouth_out = l[4] != 0;
    const bool breath = nose_in || nose_out || mouth_in || mouth_out;
    auto f = [](bool b) { return b ? 1.0f : 0.0f; };
    switch (role) {
        case ModelRole::Channel:
            return std::vector<float>{f(pause), f(nose_in || nose_out), f(mouth_in || mouth_out)};
        case ModelRole::Phase:
            if (!breath) return std::nullopt;
            return std::vector<float>{f(nose_in || mouth_in), f(nose_out || mouth_out)};
        case ModelRole::Labeling:
            return std::vector<float>{f(pause), f(breath)};
    }
    return std::nullopt;
}

std::vector<float> Classifier::scores(const FeatureMatrix& input) const {
    const auto shape = spec.input_shape();
    if (input.kind != spec.feature_kind || input.rows != shape[1] || input.cols != shape[2])
        throw Error(ErrorCode::ModelFeatureMismatch,
                    std::string(role_name(spec.role)) + " model expects " + std::string(feature_kind_name(spec.feature_kind)) +
                        " features " + std::to_string(shape[1]) + "x" + std::to_string(shape[2]) + ", got " +
                        std::string(feature_kind_name(input.kind)) + " " + std::to_string(input.rows) + "x" +
                        std::to_string(input.cols));
    nn::Tensor<float> x(1, 1, input.rows, input.cols);
    x.data = input.values;
    return net.predict(x).data;
}

Classifier make_classifier(const ModelSpec& spec, std::uint64_t seed) {
    return Classifier{spec, build_model<float>(spec, seed)};
}

namespace {

constexpr std::string_view kSpecEntry = "__spec__";

}  // namespace

std::vector<std::uint8_t> serialize_classifier(Classifier& c) {
    nn::WeightStore store = nn::save_weights(c.net);
    nn::WeightEntry meta;
    meta.name = std::string(kSpecEntry);
    meta.values = {static_cast<float>(c.spec.role), static_cast<float>(c.spec.feature_kind),
                   static_cast<float>(c.spec.dense_widths.size())};
    for (auto w : c.spec.dense_widths) meta.values.push_back(static_cast<float>(w));
    meta.shape = {static_cast<std::uint32_t>(meta.values.size())};
    store.add(std::move(meta));
    return nn::encode_weight_store(store);
}

Classifier deserialize_classifier(std::span<const std::uint8_t> bytes) {
    const nn::WeightStore store = nn::decode_weight_store(bytes);
    const nn::WeightEntry* meta = store.find(kSpecEntry);
    if (!meta || meta->values.size() < 3) throw Error(ErrorCode::ShapeMismatchOnLoad, "weight store lacks model metadata");
    auto as_int = [](float v) { return static_cast<long>(std::lround(v)); };
    const long role = as_int(meta->values[0]);
    const long kind = as_int(meta->values[1]);
    const long n_dense = as_int(meta->values[2]);
    if (role < 0 || role > 2 || kind < 0 || kind > 1 || n_dense < 0 ||
        meta->values.size() != 3 + static_cast<std::size_t>(n_dense))
        throw Error(ErrorCode::ShapeMismatchOnLoad, "malformed model metadata");
    ModelSpec spec;
    spec.role = static_cast<ModelRole>(role);
    spec.feature_kind = static_cast<FeatureKind>(kind);
    spec.dense_widths.clear();
    for (long i = 0; i < n_dense; ++i) spec.dense_widths.push_back(static_cast<std::size_t>(as_int(meta->values[3 + i])));
    Classifier c{spec, build_model<float>(spec, 0)};
    nn::load_weights(c.net, store);
    return c;
}

void save_classifier(const std::string& path, Classifier& c) {
    write_file_bytes(path, serialize_classifier(c));
}

Classifier load_classifier(const std::string& path) {
    return deserialize_classifier(read_file_bytes(path));
}

nn::Tensor<float> to_batch(std::span<const FeatureMatrix* const> inputs) {
    if (inputs.empty()) return {};
    const std::size_t rows = inputs.front()->rows, cols = inputs.front()->cols;
    nn::Tensor<float> x(inputs.size(), 1, rows, cols);
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        if (inputs[b]->rows != rows || inputs[b]->cols != cols) throw Error(ErrorCode::ShapeMismatch, "ragged feature batch");
        std::copy(inputs[b]->values.begin(), inputs[b]->values.end(), x.data.begin() + static_cast<std::ptrdiff_t>(b * rows * cols));
    }
    return x;
}

}  // namespace breathsense
