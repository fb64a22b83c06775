#pragma once

#include <memory>
#include <string>
#include <vector>

#include "breathsense/nn/layers.hpp"

namespace breathsense::nn {

/// A sequential stack of layers with a fixed per-sample input shape.
template <typename T>
class Model {
public:
    explicit Model(Shape3 input_shape) : input_shape_(input_shape), output_shape_(input_shape) {}

    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;

    template <typename L, typename... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        output_shape_ = layer->output_shape(output_shape_);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    Shape3 input_shape() const noexcept { return input_shape_; }
    Shape3 output_shape() const noexcept { return output_shape_; }
    const std::vector<std::unique_ptr<Layer<T>>>& layers() const noexcept { return layers_; }

    /// Caching pass used for training and gradient checks.
    Tensor<T> forward(const Tensor<T>& x, bool training);

    /// Full reverse pass from dLoss/dOutput; returns dLoss/dInput.
    Tensor<T> backward(const Tensor<T>& grad_output);

    /// Reverse pass from dLoss/dLogits, skipping the trailing sigmoid (the
    /// fused sigmoid + BCE gradient is (p - y) / N).
    Tensor<T> backward_from_logits(const Tensor<T>& grad_logits);

    /// Cache-free evaluation (eval-mode batch norm); safe for concurrent use.
    Tensor<T> predict(const Tensor<T>& x) const;

    /// Every named array, parameters and buffers, as "<index>.<kind>.<name>".
    std::vector<NamedParam<T>> state();
    std::vector<NamedParam<T>> parameters();

    void zero_grad();
    std::size_t parameter_count();

private:
    void check_input(const Tensor<T>& x) const;

    Shape3 input_shape_;
    Shape3 output_shape_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace breathsense::nn
