#pragma once

#include <memory>
#include <string>
#include <vector>

#include "breathsense/nn/tensor.hpp"
#include "breathsense/random.hpp"

namespace breathsense::nn {

/// One stage of a sequential network.
///
/// forward() caches whatever backward() needs; backward() consumes the cache
/// and accumulates into parameter gradients (call Model::zero_grad between
/// steps). apply() is the cache-free evaluation path and is const, so a
/// trained layer may be shared across inference threads.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual Shape3 output_shape(Shape3 in) const = 0;

    virtual Tensor<T> forward(const Tensor<T>& x, bool training) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
    virtual Tensor<T> apply(const Tensor<T>& x) const = 0;

    /// Named arrays owned by the layer: trainable parameters and buffers.
    virtual std::vector<NamedParam<T>> state() { return {}; }

protected:
    void mark_cached() noexcept { cached_ = true; }
    void consume_cache();

private:
    bool cached_ = false;
};

template <typename T>
class Conv2D final : public Layer<T> {
public:
    static constexpr std::size_t kKernel = 3;

    Conv2D(std::size_t in_channels, std::size_t out_channels);

    std::string kind() const override { return "conv2d"; }
    Shape3 output_shape(Shape3 in) const override;
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Tensor<T> apply(const Tensor<T>& x) const override;
    std::vector<NamedParam<T>> state() override;

    void init_kaiming(Rng& rng);

    std::size_t in_channels() const noexcept { return in_; }
    std::size_t out_channels() const noexcept { return out_; }
    Param<T>& weight() noexcept { return weight_; }
    Param<T>& bias() noexcept { return bias_; }

private:
    std::size_t in_, out_;
    Param<T> weight_;  // (out, in, 3, 3)
    Param<T> bias_;    // (out)
    Tensor<T> input_;
};

template <typename T>
class BatchNorm2D final : public Layer<T> {
public:
    static constexpr double kEpsilon = 1e-5;
    static constexpr double kMomentum = 0.1;

    explicit BatchNorm2D(std::size_t channels);

    std::string kind() const override { return "batchnorm2d"; }
    Shape3 output_shape(Shape3 in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Tensor<T> apply(const Tensor<T>& x) const override;
    std::vector<NamedParam<T>> state() override;

    Param<T>& gamma() noexcept { return gamma_; }
    Param<T>& beta() noexcept { return beta_; }
    Param<T>& running_mean() noexcept { return running_mean_; }
    Param<T>& running_var() noexcept { return running_var_; }

private:
    std::size_t channels_;
    Param<T> gamma_, beta_;
    Param<T> running_mean_, running_var_;
    bool cached_training_ = false;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

template <typename T>
class MaxPool2D final : public Layer<T> {
public:
    std::string kind() const override { return "maxpool2d"; }
    Shape3 output_shape(Shape3 in) const override { return {in[0], in[1] / 2, in[2] / 2}; }
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Tensor<T> apply(const Tensor<T>& x) const override;

private:
    std::array<std::size_t, 4> in_shape_{};
    std::vector<std::size_t> argmax_;
};

template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(std::size_t in_features, std::size_t out_features);

    std::string kind() const override { return "dense"; }
    Shape3 output_shape(Shape3 in) const override;
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Tensor<T> apply(const Tensor<T>& x) const override;
    std::vector<NamedParam<T>> state() override;

    void init_kaiming(Rng& rng);

    std::size_t in_features() const noexcept { return in_; }
    std::size_t out_features() const noexcept { return out_; }
    Param<T>& weight() noexcept { return weight_; }
    Param<T>& bias() noexcept { return bias_; }

private:
    std::size_t in_, out_;
    Param<T> weight_;  // (out, in)
    Param<T> bias_;    // (out)
    Tensor<T> input_;
};

template <typename T>
class ReLU final : public Layer<T> {
public:
    std::string kind() const override { return "relu"; }
    Shape3 output_shape(Shape3 in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Tensor<T> apply(const Tensor<T>& x) const override;

private:
    Tensor<T> input_;
};

template <typename T>
class Sigmoid final : public Layer<T> {
public:
    std::string kind() const override { return "sigmoid"; }
    Shape3 output_shape(Shape3 in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Tensor<T> apply(const Tensor<T>& x) const override;

private:
    Tensor<T> output_;
};

template <typename T>
class Flatten final : public Layer<T> {
public:
    std::string kind() const override { return "flatten"; }
    Shape3 output_shape(Shape3 in) const override { return {in[0] * in[1] * in[2], 1, 1}; }
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Tensor<T> apply(const Tensor<T>& x) const override;

private:
    std::array<std::size_t, 4> in_shape_{};
};

/// Numerically stable logistic function.
template <typename T>
T sigmoid(T z) noexcept;

template <typename T>
T relu(T z) noexcept {
    return z > T{0} ? z : T{0};
}

}  // namespace breathsense::nn
