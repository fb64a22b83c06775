#include "breathsense/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "breathsense/error.hpp"

namespace breathsense::nn {

namespace {

template <typename T>
void check(std::span<const T> p, std::span<const T> y) {
    if (p.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "predictions and targets differ in length");
    if (p.empty()) throw Error(ErrorCode::ShapeMismatch, "empty prediction vector");
}

}  // namespace

template <typename T>
BceResult<T> bce_loss(std::span<const T> p, std::span<const T> y) {
    check(p, y);
    const double n = static_cast<double>(p.size());
    double total = 0.0;
    BceResult<T> out;
    out.grad_logits.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pc = std::clamp(static_cast<double>(p[i]), kProbabilityClamp, 1.0 - kProbabilityClamp);
        const double yi = y[i];
        total += -(yi * std::log(pc) + (1.0 - yi) * std::log(1.0 - pc));
        out.grad_logits[i] = static_cast<T>((static_cast<double>(p[i]) - yi) / n);
    }
    out.loss = static_cast<T>(total / n);
    return out;
}

template <typename T>
std::vector<T> bce_grad_probabilities(std::span<const T> p, std::span<const T> y) {
    check(p, y);
    const double n = static_cast<double>(p.size());
    std::vector<T> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = static_cast<double>(p[i]);
        if (pi < kProbabilityClamp || pi > 1.0 - kProbabilityClamp) {
            g[i] = T{0};  // flat region of the clamp
            continue;
        }
        const double yi = y[i];
        g[i] = static_cast<T>((-yi / pi + (1.0 - yi) / (1.0 - pi)) / n);
    }
    return g;
}

template BceResult<float> bce_loss<float>(std::span<const float>, std::span<const float>);
template BceResult<double> bce_loss<double>(std::span<const double>, std::span<const double>);
template std::vector<float> bce_grad_probabilities<float>(std::span<const float>, std::span<const float>);
template std::vector<double> bce_grad_probabilities<double>(std::span<const double>, std::span<const double>);

}  // namespace breathsense::nn
