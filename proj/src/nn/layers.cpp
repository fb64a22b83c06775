#include "breathsense/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "breathsense/error.hpp"

namespace breathsense::nn {

std::string shape_string(const std::array<std::size_t, 4>& s) {
    return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," + std::to_string(s[2]) + "," +
           std::to_string(s[3]) + ")";
}

namespace {

template <typename T>
void check_finite([[maybe_unused]] const Tensor<T>& t, [[maybe_unused]] const char* where) {
#ifndef NDEBUG
    for (T v : t.data)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string("non-finite value after ") + where);
#endif
}

template <typename T>
void require_same_shape(const Tensor<T>& g, const std::array<std::size_t, 4>& expected, const char* layer) {
    if (g.shape != expected)
        throw Error(ErrorCode::ShapeMismatch, std::string(layer) + " gradient shape " + shape_string(g.shape) +
                                                  " != " + shape_string(expected));
}

template <typename T>
void kaiming_uniform(std::vector<T>& w, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : w) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
}

}  // namespace

template <typename T>
void Layer<T>::consume_cache() {
    if (!cached_) throw Error(ErrorCode::StaleCache, kind() + ": backward called without a preceding forward");
    cached_ = false;
}

template <typename T>
T sigmoid(T z) noexcept {
    if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
    const T e = std::exp(z);
    return e / (T{1} + e);
}

// ---------------------------------------------------------------- Conv2D

template <typename T>
Conv2D<T>::Conv2D(std::size_t in_channels, std::size_t out_channels)
    : in_(in_channels), out_(out_channels), weight_({out_channels, in_channels, kKernel, kKernel}, true),
      bias_({out_channels}, true) {}

template <typename T>
Shape3 Conv2D<T>::output_shape(Shape3 in) const {
    if (in[0] != in_) throw Error(ErrorCode::ShapeMismatch, "conv2d expects " + std::to_string(in_) + " input channels");
    return {out_, in[1], in[2]};
}

template <typename T>
void Conv2D<T>::init_kaiming(Rng& rng) {
    kaiming_uniform(weight_.value, in_ * kKernel * kKernel, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), T{0});
}

template <typename T>
Tensor<T> Conv2D<T>::apply(const Tensor<T>& x) const {
    if (x.channels() != in_)
        throw Error(ErrorCode::ShapeMismatch, "conv2d input has " + std::to_string(x.channels()) + " channels, expected " +
                                                  std::to_string(in_));
    const std::size_t B = x.batch(), H = x.height(), W = x.width();
    Tensor<T> y(B, out_, H, W);
    const std::size_t plane = H * W;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t o = 0; o < out_; ++o) {
            T* out = y.data.data() + (b * out_ + o) * plane;
            std::fill(out, out + plane, bias_.value[o]);
            for (std::size_t i = 0; i < in_; ++i) {
                const T* in = x.data.data() + (b * in_ + i) * plane;
                const T* k = weight_.value.data() + (o * in_ + i) * 9;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const T w = k[ky * 3 + kx];
                        const std::size_t x0 = kx == 0 ? 1 : 0;
                        const std::size_t x1 = kx == 2 ? W - 1 : W;
                        for (std::size_t r = 0; r < H; ++r) {
                            const std::ptrdiff_t ir = static_cast<std::ptrdiff_t>(r + ky) - 1;
                            if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(H)) continue;
                            T* orow = out + r * W;
                            const std::ptrdiff_t off = ir * static_cast<std::ptrdiff_t>(W) + static_cast<std::ptrdiff_t>(kx) - 1;
                            for (std::size_t c = x0; c < x1; ++c) orow[c] += w * in[off + static_cast<std::ptrdiff_t>(c)];
                        }
                    }
                }
            }
        }
    }
    check_finite(y, "conv2d");
    return y;
}

template <typename T>
Tensor<T> Conv2D<T>::forward(const Tensor<T>& x, bool) {
    Tensor<T> y = apply(x);
    input_ = x;
    this->mark_cached();
    return y;
}

template <typename T>
Tensor<T> Conv2D<T>::backward(const Tensor<T>& g) {
    this->consume_cache();
    const Tensor<T>& x = input_;
    const std::size_t B = x.batch(), H = x.height(), W = x.width();
    require_same_shape(g, {B, out_, H, W}, "conv2d");
    const std::size_t plane = H * W;
    Tensor<T> dx(B, in_, H, W);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t o = 0; o < out_; ++o) {
            const T* go = g.data.data() + (b * out_ + o) * plane;
            T acc_b{0};
            for (std::size_t p = 0; p < plane; ++p) acc_b += go[p];
            bias_.grad[o] += acc_b;
            for (std::size_t i = 0; i < in_; ++i) {
                const T* in = x.data.data() + (b * in_ + i) * plane;
                T* din = dx.data.data() + (b * in_ + i) * plane;
                const T* k = weight_.value.data() + (o * in_ + i) * 9;
                T* dk = weight_.grad.data() + (o * in_ + i) * 9;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const T w = k[ky * 3 + kx];
                        const std::size_t x0 = kx == 0 ? 1 : 0;
                        const std::size_t x1 = kx == 2 ? W - 1 : W;
                        T acc{0};
                        for (std::size_t r = 0; r < H; ++r) {
                            const std::ptrdiff_t ir = static_cast<std::ptrdiff_t>(r + ky) - 1;
                            if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(H)) continue;
                            const T* grow = go + r * W;
                            const std::ptrdiff_t off = ir * static_cast<std::ptrdiff_t>(W) + static_cast<std::ptrdiff_t>(kx) - 1;
                            for (std::size_t c = x0; c < x1; ++c) {
                                const std::ptrdiff_t idx = off + static_cast<std::ptrdiff_t>(c);
                                acc += grow[c] * in[idx];
                                din[idx] += w * grow[c];
                            }
                        }
                        dk[ky * 3 + kx] += acc;
                    }
                }
            }
        }
    }
    return dx;
}

template <typename T>
std::vector<NamedParam<T>> Conv2D<T>::state() {
    return {{"weight", &weight_}, {"bias", &bias_}};
}

// ---------------------------------------------------------------- BatchNorm2D

template <typename T>
BatchNorm2D<T>::BatchNorm2D(std::size_t channels)
    : channels_(channels), gamma_({channels}, true, T{1}), beta_({channels}, true, T{0}),
      running_mean_({channels}, false, T{0}), running_var_({channels}, false, T{1}) {}

template <typename T>
Tensor<T> BatchNorm2D<T>::apply(const Tensor<T>& x) const {
    if (x.channels() != channels_) throw Error(ErrorCode::ShapeMismatch, "batchnorm2d channel count mismatch");
    Tensor<T> y(x.batch(), x.channels(), x.height(), x.width());
    const std::size_t plane = x.height() * x.width();
    for (std::size_t c = 0; c < channels_; ++c) {
        const T inv = T{1} / std::sqrt(running_var_.value[c] + static_cast<T>(kEpsilon));
        const T scale = gamma_.value[c] * inv;
        const T shift = beta_.value[c] - running_mean_.value[c] * scale;
        for (std::size_t b = 0; b < x.batch(); ++b) {
            const T* in = x.data.data() + (b * channels_ + c) * plane;
            T* out = y.data.data() + (b * channels_ + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) out[p] = in[p] * scale + shift;
        }
    }
    check_finite(y, "batchnorm2d");
    return y;
}

template <typename T>
Tensor<T> BatchNorm2D<T>::forward(const Tensor<T>& x, bool training) {
    if (!training) {
        Tensor<T> y = apply(x);
        // Eval-mode backward only needs the normalized input.
        xhat_ = Tensor<T>(x.batch(), x.channels(), x.height(), x.width());
        const std::size_t plane = x.height() * x.width();
        inv_std_.assign(channels_, T{0});
        for (std::size_t c = 0; c < channels_; ++c) {
            inv_std_[c] = T{1} / std::sqrt(running_var_.value[c] + static_cast<T>(kEpsilon));
            for (std::size_t b = 0; b < x.batch(); ++b)
                for (std::size_t p = 0; p < plane; ++p) {
                    const std::size_t idx = (b * channels_ + c) * plane + p;
                    xhat_.data[idx] = (x.data[idx] - running_mean_.value[c]) * inv_std_[c];
                }
        }
        cached_training_ = false;
        this->mark_cached();
        return y;
    }

    if (x.channels() != channels_) throw Error(ErrorCode::ShapeMismatch, "batchnorm2d channel count mismatch");
    const std::size_t plane = x.height() * x.width();
    const std::size_t n = x.batch() * plane;
    if (n <= 1) throw Error(ErrorCode::DegenerateBatch, "train-mode batch norm over a single element per channel");

    Tensor<T> y(x.batch(), x.channels(), x.height(), x.width());
    xhat_ = Tensor<T>(x.batch(), x.channels(), x.height(), x.width());
    inv_std_.assign(channels_, T{0});
    for (std::size_t c = 0; c < channels_; ++c) {
        double mean = 0.0;
        for (std::size_t b = 0; b < x.batch(); ++b) {
            const T* in = x.data.data() + (b * channels_ + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) mean += in[p];
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t b = 0; b < x.batch(); ++b) {
            const T* in = x.data.data() + (b * channels_ + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) var += (in[p] - mean) * (in[p] - mean);
        }
        var /= static_cast<double>(n);
        const T inv = static_cast<T>(1.0 / std::sqrt(var + kEpsilon));
        inv_std_[c] = inv;
        for (std::size_t b = 0; b < x.batch(); ++b) {
            const T* in = x.data.data() + (b * channels_ + c) * plane;
            T* xh = xhat_.data.data() + (b * channels_ + c) * plane;
            T* out = y.data.data() + (b * channels_ + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                xh[p] = static_cast<T>((in[p] - mean) * inv);
                out[p] = gamma_.value[c] * xh[p] + beta_.value[c];
            }
        }
        const double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
        running_mean_.value[c] = static_cast<T>((1.0 - kMomentum) * running_mean_.value[c] + kMomentum * mean);
        running_var_.value[c] = static_cast<T>((1.0 - kMomentum) * running_var_.value[c] + kMomentum * unbiased);
    }
    cached_training_ = true;
    this->mark_cached();
    check_finite(y, "batchnorm2d");
    return y;
}

template <typename T>
Tensor<T> BatchNorm2D<T>::backward(const Tensor<T>& g) {
    this->consume_cache();
    require_same_shape(g, xhat_.shape, "batchnorm2d");
    const std::size_t B = g.batch();
    const std::size_t plane = g.height() * g.width();
    const std::size_t n = B * plane;
    Tensor<T> dx(B, channels_, g.height(), g.width());
    for (std::size_t c = 0; c < channels_; ++c) {
        T sum_g{0}, sum_gx{0};
        for (std::size_t b = 0; b < B; ++b) {
            const T* gp = g.data.data() + (b * channels_ + c) * plane;
            const T* xh = xhat_.data.data() + (b * channels_ + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                sum_g += gp[p];
                sum_gx += gp[p] * xh[p];
            }
        }
        gamma_.grad[c] += sum_gx;
        beta_.grad[c] += sum_g;
        const T scale = gamma_.value[c] * inv_std_[c];
        for (std::size_t b = 0; b < B; ++b) {
            const T* gp = g.data.data() + (b * channels_ + c) * plane;
            const T* xh = xhat_.data.data() + (b * channels_ + c) * plane;
            T* d = dx.data.data() + (b * channels_ + c) * plane;
            if (cached_training_) {
                const T inv_n = T{1} / static_cast<T>(n);
                for (std::size_t p = 0; p < plane; ++p)
                    d[p] = scale * (gp[p] - sum_g * inv_n - xh[p] * sum_gx * inv_n);
            } else {
                for (std::size_t p = 0; p < plane; ++p) d[p] = scale * gp[p];
            }
        }
    }
    return dx;
}

template <typename T>
std::vector<NamedParam<T>> BatchNorm2D<T>::state() {
    return {{"gamma", &gamma_}, {"beta", &beta_}, {"running_mean", &running_mean_}, {"running_var", &running_var_}};
}

// ---------------------------------------------------------------- MaxPool2D

template <typename T>
Tensor<T> MaxPool2D<T>::apply(const Tensor<T>& x) const {
    if (x.height() < 2 || x.width() < 2) throw Error(ErrorCode::ShapeMismatch, "maxpool2d needs H, W >= 2");
    const std::size_t B = x.batch(), C = x.channels(), H = x.height(), W = x.width();
    const std::size_t OH = H / 2, OW = W / 2;
    Tensor<T> y(B, C, OH, OW);
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        const T* in = x.data.data() + bc * H * W;
        T* out = y.data.data() + bc * OH * OW;
        for (std::size_t r = 0; r < OH; ++r)
            for (std::size_t c = 0; c < OW; ++c) {
                const T* p = in + 2 * r * W + 2 * c;
                out[r * OW + c] = std::max(std::max(p[0], p[1]), std::max(p[W], p[W + 1]));
            }
    }
    return y;
}

template <typename T>
Tensor<T> MaxPool2D<T>::forward(const Tensor<T>& x, bool) {
    if (x.height() < 2 || x.width() < 2) throw Error(ErrorCode::ShapeMismatch, "maxpool2d needs H, W >= 2");
    const std::size_t B = x.batch(), C = x.channels(), H = x.height(), W = x.width();
    const std::size_t OH = H / 2, OW = W / 2;
    Tensor<T> y(B, C, OH, OW);
    argmax_.assign(y.size(), 0);
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        const std::size_t base = bc * H * W;
        for (std::size_t r = 0; r < OH; ++r)
            for (std::size_t c = 0; c < OW; ++c) {
                std::size_t best = base + 2 * r * W + 2 * c;
                for (std::size_t idx : {best + 1, best + W, best + W + 1})
                    if (x.data[idx] > x.data[best]) best = idx;
                const std::size_t o = bc * OH * OW + r * OW + c;
                y.data[o] = x.data[best];
                argmax_[o] = best;
            }
    }
    in_shape_ = x.shape;
    this->mark_cached();
    return y;
}

template <typename T>
Tensor<T> MaxPool2D<T>::backward(const Tensor<T>& g) {
    this->consume_cache();
    require_same_shape(g, {in_shape_[0], in_shape_[1], in_shape_[2] / 2, in_shape_[3] / 2}, "maxpool2d");
    Tensor<T> dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    for (std::size_t o = 0; o < g.size(); ++o) dx.data[argmax_[o]] += g.data[o];
    return dx;
}

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features)
    : in_(in_features), out_(out_features), weight_({out_features, in_features}, true), bias_({out_features}, true) {}

template <typename T>
Shape3 Dense<T>::output_shape(Shape3 in) const {
    if (in[0] * in[1] * in[2] != in_) throw Error(ErrorCode::ShapeMismatch, "dense expects " + std::to_string(in_) + " inputs");
    return {out_, 1, 1};
}

template <typename T>
void Dense<T>::init_kaiming(Rng& rng) {
    kaiming_uniform(weight_.value, in_, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), T{0});
}

template <typename T>
Tensor<T> Dense<T>::apply(const Tensor<T>& x) const {
    if (x.per_sample() != in_)
        throw Error(ErrorCode::ShapeMismatch, "dense input has " + std::to_string(x.per_sample()) + " features, expected " +
                                                  std::to_string(in_));
    const std::size_t B = x.batch();
    Tensor<T> y(B, out_, 1, 1);
    for (std::size_t b = 0; b < B; ++b) {
        const T* in = x.data.data() + b * in_;
        for (std::size_t o = 0; o < out_; ++o) {
            const T* w = weight_.value.data() + o * in_;
            // Four partial sums let the compiler keep several lanes busy.
            T s0{0}, s1{0}, s2{0}, s3{0};
            std::size_t i = 0;
            for (; i + 4 <= in_; i += 4) {
                s0 += w[i] * in[i];
                s1 += w[i + 1] * in[i + 1];
                s2 += w[i + 2] * in[i + 2];
                s3 += w[i + 3] * in[i + 3];
            }
            for (; i < in_; ++i) s0 += w[i] * in[i];
            y.data[b * out_ + o] = bias_.value[o] + ((s0 + s1) + (s2 + s3));
        }
    }
    check_finite(y, "dense");
    return y;
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, bool) {
    Tensor<T> y = apply(x);
    input_ = x;
    this->mark_cached();
    return y;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& g) {
    this->consume_cache();
    const std::size_t B = input_.batch();
    require_same_shape(g, {B, out_, 1, 1}, "dense");
    Tensor<T> dx(input_.batch(), input_.channels(), input_.height(), input_.width());
    for (std::size_t b = 0; b < B; ++b) {
        const T* in = input_.data.data() + b * in_;
        T* din = dx.data.data() + b * in_;
        for (std::size_t o = 0; o < out_; ++o) {
            const T go = g.data[b * out_ + o];
            bias_.grad[o] += go;
            if (go == T{0}) continue;
            const T* w = weight_.value.data() + o * in_;
            T* dw = weight_.grad.data() + o * in_;
            for (std::size_t i = 0; i < in_; ++i) {
                dw[i] += go * in[i];
                din[i] += go * w[i];
            }
        }
    }
    return dx;
}

template <typename T>
std::vector<NamedParam<T>> Dense<T>::state() {
    return {{"weight", &weight_}, {"bias", &bias_}};
}

// ---------------------------------------------------------------- ReLU / Sigmoid / Flatten

template <typename T>
Tensor<T> ReLU<T>::apply(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (auto& v : y.data) v = relu(v);
    return y;
}

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, bool) {
    input_ = x;
    this->mark_cached();
    return apply(x);
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& g) {
    this->consume_cache();
    require_same_shape(g, input_.shape, "relu");
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(input_.data[i] > T{0})) dx.data[i] = T{0};
    return dx;
}

template <typename T>
Tensor<T> Sigmoid<T>::apply(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (auto& v : y.data) v = sigmoid(v);
    return y;
}

template <typename T>
Tensor<T> Sigmoid<T>::forward(const Tensor<T>& x, bool) {
    output_ = apply(x);
    this->mark_cached();
    return output_;
}

template <typename T>
Tensor<T> Sigmoid<T>::backward(const Tensor<T>& g) {
    this->consume_cache();
    require_same_shape(g, output_.shape, "sigmoid");
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= output_.data[i] * (T{1} - output_.data[i]);
    return dx;
}

template <typename T>
Tensor<T> Flatten<T>::apply(const Tensor<T>& x) const {
    Tensor<T> y;
    y.shape = {x.batch(), x.per_sample(), 1, 1};
    y.data = x.data;
    return y;
}

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x, bool) {
    in_shape_ = x.shape;
    this->mark_cached();
    return apply(x);
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& g) {
    this->consume_cache();
    Tensor<T> dx;
    dx.shape = in_shape_;
    if (g.size() != in_shape_[0] * in_shape_[1] * in_shape_[2] * in_shape_[3])
        throw Error(ErrorCode::ShapeMismatch, "flatten gradient size mismatch");
    dx.data = g.data;
    return dx;
}

#define BREATHSENSE_INSTANTIATE(T) \
    template class Layer<T>;       \
    template class Conv2D<T>;      \
    template class BatchNorm2D<T>; \
    template class MaxPool2D<T>;   \
    template class Dense<T>;       \
    template class ReLU<T>;        \
    template class Sigmoid<T>;     \
    template class Flatten<T>;     \
    template T sigmoid<T>(T) noexcept;

BREATHSENSE_INSTANTIATE(float)
BREATHSENSE_INSTANTIATE(double)

#undef BREATHSENSE_INSTANTIATE

}  // namespace breathsense::nn
