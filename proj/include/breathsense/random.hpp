#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace breathsense {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);

/// Uniform integer in [0, n) by rejection sampling.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Standard normal via Box-Muller (platform independent, unlike std::normal_distribution).
double standard_normal(Rng& rng);

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace breathsense
