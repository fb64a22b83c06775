#include "breathsense/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "breathsense/error.hpp"

namespace breathsense {

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "FFT size must be positive");
    if (std::has_single_bit(n)) {
        const int bits = std::countr_zero(n);
        bitrev_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (int b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = r;
        }
        twiddles_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k)
            twiddles_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        return;
    }

    // Bluestein: x_k w_k convolved with conj chirp, w_k = exp(-i*pi*k^2/N).
    const std::size_t m = std::bit_ceil(2 * n - 1);
    inner_ = std::make_unique<FftPlan>(m);
    chirp_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2N keeps the phase argument small and exact.
        const std::size_t k2 = (k * k) % (2 * n);
        chirp_[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
    }
    chirp_spectrum_.assign(m, {});
    chirp_spectrum_[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n; ++k) {
        chirp_spectrum_[k] = std::conj(chirp_[k]);
        chirp_spectrum_[m - k] = std::conj(chirp_[k]);
    }
    inner_->forward(chirp_spectrum_);
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::radix2(std::span<std::complex<double>> a) const {
    const std::size_t n = n_;
    for (std::size_t i = 0; i < n; ++i)
        if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const std::complex<double> t = a[i + j + half] * twiddles_[j * step];
                a[i + j + half] = a[i + j] - t;
                a[i + j] += t;
            }
        }
    }
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
    if (data.size() != n_) throw Error(ErrorCode::ShapeMismatch, "FFT buffer length does not match plan");
    if (!inner_) {
        radix2(data);
        return;
    }
    const std::size_t m = inner_->size();
    std::vector<std::complex<double>> work(m);
    for (std::size_t k = 0; k < n_; ++k) work[k] = data[k] * chirp_[k];
    inner_->forward(work);
    for (std::size_t k = 0; k < m; ++k) work[k] *= chirp_spectrum_[k];
    // Inverse via conjugation: ifft(x) = conj(fft(conj(x))) / m.
    for (auto& v : work) v = std::conj(v);
    inner_->forward(work);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n_; ++k) data[k] = std::conj(work[k]) * scale * chirp_[k];
}

}  // namespace breathsense
