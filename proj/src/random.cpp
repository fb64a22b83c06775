#include "breathsense/random.hpp"

#include <cmath>
#include <numbers>

namespace breathsense {

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = Rng::max() - Rng::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

double standard_normal(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace breathsense
