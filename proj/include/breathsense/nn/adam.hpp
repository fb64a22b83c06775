#pragma once

#include <vector>

#include "breathsense/nn/tensor.hpp"

namespace breathsense::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moment buffers are keyed by parameter position, so
/// step() must always receive the same parameter list in the same order.
template <typename T>
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<NamedParam<T>>& params);

    long long steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return cfg_; }

private:
    AdamConfig cfg_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace breathsense::nn
