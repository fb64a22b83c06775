#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace breathsense {

/// Forward complex DFT of a fixed length. Power-of-two sizes use an
/// iterative radix-2 transform; other sizes go through Bluestein's chirp-z
/// algorithm on a padded radix-2 plan. Immutable after construction, so a
/// plan may be shared across threads.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);
    ~FftPlan();
    FftPlan(FftPlan&&) noexcept;
    FftPlan& operator=(FftPlan&&) noexcept;

    std::size_t size() const noexcept { return n_; }

    /// In-place X[k] = sum_n x[n] exp(-2*pi*i*k*n/N).
    void forward(std::span<std::complex<double>> data) const;

private:
    void radix2(std::span<std::complex<double>> data) const;

    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> twiddles_;
    // Bluestein state (non power-of-two sizes)
    std::unique_ptr<FftPlan> inner_;
    std::vector<std::complex<double>> chirp_;
    std::vector<std::complex<double>> chirp_spectrum_;
};

}  // namespace breathsense
