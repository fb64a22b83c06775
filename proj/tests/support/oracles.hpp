#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the code under test except where noted.

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "breathsense/dataset.hpp"
#include "breathsense/nn/model.hpp"
#include "breathsense/synthetic.hpp"

namespace oracle {

/// O(n^2) DFT, X[k] = sum x[n] exp(-2 pi i k n / N).
std::vector<std::complex<double>> brute_dft(std::span<const double> x);

/// ||a - b|| / max(||a||, ||b||); 0 when both are (near) zero.
double normwise_relative_error(std::span<const double> a, std::span<const double> b);

/// Up to `k` distinct random indices in [0, n) (all of them when n <= k).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct GradCheck {
    double rel_error = 0.0;
    std::size_t coords = 0;
    std::size_t excluded = 0;  // coordinates whose +-h step crossed a kink
};

/// Layer check with loss = sum(w * layer.forward(x, training)). Compares
/// backward() against central differences for sampled input coordinates and
/// every trainable parameter tensor. skip_kinks as for check_model.
GradCheck check_layer(breathsense::nn::Layer<double>& layer, breathsense::nn::Tensor<double> x, std::uint64_t seed,
                      double h = 1e-4, std::size_t per_tensor = 24, bool skip_kinks = false);

/// Whole-model check with the mean BCE loss and the fused logits backward.
/// The small default step keeps perturbations clear of ReLU / max-pool kinks.
/// With skip_kinks, a coordinate is left out when either perturbed forward
/// pass flips a ReLU sign or a max-pool winner anywhere in the network.
GradCheck check_model(breathsense::nn::Model<double>& model, breathsense::nn::Tensor<double> x,
                      const std::vector<double>& targets, std::uint64_t seed, double h = 1e-6, std::size_t per_tensor = 12,
                      bool skip_kinks = false);

breathsense::nn::Tensor<double> random_tensor(std::size_t b, std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed,
                                              double scale = 1.0);

/// Hand-assembled RIFF/WAVE bytes.
struct WavSpec {
    std::uint16_t format_tag = 1;  // 1 PCM, 3 IEEE float, 0xFFFE extensible
    std::uint16_t sub_format = 1;  // for extensible
    std::uint16_t channels = 1;
    std::uint32_t sample_rate = 16000;
    std::uint16_t bits = 16;
    bool extra_chunk = false;  // a LIST chunk before "data"
};
std::vector<std::uint8_t> build_wav(const WavSpec& spec, const std::vector<std::uint8_t>& payload);

/// Little-endian sample encoders for payload assembly.
void put_i16(std::vector<std::uint8_t>& out, std::int16_t v);
void put_i24(std::vector<std::uint8_t>& out, std::int32_t v);
void put_i32(std::vector<std::uint8_t>& out, std::int32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);

/// mkdtemp-based scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "bs_test");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::string& path() const noexcept { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

/// Labelled windows of a synthesized clip, tagged with subject / clip ids.
std::vector<breathsense::LabeledSegment> label_segments(const breathsense::SyntheticClip& synth, const std::string& subject);

/// The constructed 3-class separable set: per subject, runs of pause (noise
/// floor), 500 Hz-band noise (nasal) and 4 kHz-band noise (oral).
std::vector<breathsense::LabeledSegment> channel_dataset(int subjects, double seconds_per_class_run, int runs_per_class,
                                                         std::uint64_t seed);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace oracle
