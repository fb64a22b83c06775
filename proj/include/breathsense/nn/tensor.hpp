#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace breathsense::nn {

/// (channels, height, width) of one sample.
using Shape3 = std::array<std::size_t, 3>;

/// Batch-major 4-D activation tensor (batch, channels, height, width),
/// row-major. Dense activations use height = width = 1.
template <typename T>
struct Tensor {
    std::array<std::size_t, 4> shape{0, 0, 0, 0};
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::size_t b, std::size_t c, std::size_t h, std::size_t w, T fill = T{0})
        : shape{b, c, h, w}, data(b * c * h * w, fill) {}

    std::size_t batch() const noexcept { return shape[0]; }
    std::size_t channels() const noexcept { return shape[1]; }
    std::size_t height() const noexcept { return shape[2]; }
    std::size_t width() const noexcept { return shape[3]; }
    std::size_t size() const noexcept { return data.size(); }
    std::size_t per_sample() const noexcept { return shape[1] * shape[2] * shape[3]; }
    Shape3 sample_shape() const noexcept { return {shape[1], shape[2], shape[3]}; }

    T& at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    const T& at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
};

/// A learnable (or buffered) array with its logical shape. Buffers such as
/// BatchNorm running statistics leave grad empty.
template <typename T>
struct Param {
    std::vector<std::size_t> shape;
    std::vector<T> value;
    std::vector<T> grad;

    Param() = default;
    Param(std::vector<std::size_t> s, bool trainable, T fill = T{0}) : shape(std::move(s)) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        value.assign(n, fill);
        if (trainable) grad.assign(n, T{0});
    }

    bool trainable() const noexcept { return !grad.empty(); }
};

template <typename T>
struct NamedParam {
    std::string name;
    Param<T>* param;
};

std::string shape_string(const std::array<std::size_t, 4>& shape);

}  // namespace breathsense::nn
