#pragma once

#include <span>
#include <vector>

namespace breathsense::nn {

inline constexpr double kProbabilityClamp = 1e-7;

template <typename T>
struct BceResult {
    T loss{0};
    /// dLoss/dLogits for the fused sigmoid + BCE: (p - y) / N.
    std::vector<T> grad_logits;
};

/// Mean binary cross-entropy over all elements. Predictions are clamped to
/// [1e-7, 1 - 1e-7] for the loss value.
template <typename T>
BceResult<T> bce_loss(std::span<const T> probabilities, std::span<const T> targets);

/// dLoss/dProbabilities of the clamped mean BCE (for an unfused sigmoid).
template <typename T>
std::vector<T> bce_grad_probabilities(std::span<const T> probabilities, std::span<const T> targets);

}  // namespace breathsense::nn
