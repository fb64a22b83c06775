#include "oracles.hpp"

#include <stdlib.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "breathsense/nn/loss.hpp"

namespace oracle {

using namespace breathsense;

std::vector<std::complex<double>> brute_dft(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            // Reduce k*t mod n first so the angle stays accurate.
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

double normwise_relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max(std::sqrt(na), std::sqrt(nb));
    return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx;
    if (n <= k) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    std::mt19937_64 g(seed);
    std::set<std::size_t> chosen;
    while (chosen.size() < k) chosen.insert(static_cast<std::size_t>(g() % n));
    return {chosen.begin(), chosen.end()};
}

nn::Tensor<double> random_tensor(std::size_t b, std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed, double scale) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    nn::Tensor<double> t(b, c, h, w);
    for (auto& v : t.data) v = u(g);
    return t;
}

namespace {

// Switching pattern of a piecewise-linear layer for input `a`: ReLU input
// signs, or the winner of each 2x2 pool window. Other layers add nothing.
void append_kink_pattern(const nn::Layer<double>& layer, const nn::Tensor<double>& a, std::vector<std::uint8_t>& pattern) {
    const std::string kind = layer.kind();
    if (kind == "relu") {
        for (double v : a.data) pattern.push_back(v > 0.0);
    } else if (kind == "maxpool2d") {
        for (std::size_t b = 0; b < a.batch(); ++b)
            for (std::size_t c = 0; c < a.channels(); ++c)
                for (std::size_t i = 0; i + 1 < a.height(); i += 2)
                    for (std::size_t j = 0; j + 1 < a.width(); j += 2) {
                        std::uint8_t best = 0;
                        double v = a.at(b, c, i, j);
                        for (std::uint8_t k = 1; k < 4; ++k)
                            if (a.at(b, c, i + k / 2, j + k % 2) > v) {
                                v = a.at(b, c, i + k / 2, j + k % 2);
                                best = k;
                            }
                        pattern.push_back(best);
                    }
    }
}

// Central differences of `loss` (which refreshes `pattern`), compared with
// the analytic values. With skip_kinks, coordinates whose +-h evaluations
// change the pattern are dropped and counted.
GradCheck compare(const std::vector<double*>& coords, const std::vector<double>& analytic, const std::function<double()>& loss,
                  const std::vector<std::uint8_t>& pattern, double h, bool skip_kinks) {
    loss();
    const std::vector<std::uint8_t> base = pattern;
    GradCheck out;
    std::vector<double> kept_analytic, kept_numeric;
    for (std::size_t k = 0; k < coords.size(); ++k) {
        double* c = coords[k];
        const double orig = *c;
        *c = orig + h;
        const double up = loss();
        bool kink = pattern != base;
        *c = orig - h;
        const double down = loss();
        kink = kink || pattern != base;
        *c = orig;
        if (skip_kinks && kink) {
            ++out.excluded;
            continue;
        }
        kept_analytic.push_back(analytic[k]);
        kept_numeric.push_back((up - down) / (2.0 * h));
    }
    out.rel_error = normwise_relative_error(kept_analytic, kept_numeric);
    out.coords = kept_analytic.size();
    return out;
}

}  // namespace

GradCheck check_layer(nn::Layer<double>& layer, nn::Tensor<double> x, std::uint64_t seed, double h, std::size_t per_tensor,
                      bool skip_kinks) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto y0 = layer.forward(x, true);
    nn::Tensor<double> w;
    w.shape = y0.shape;
    w.data.resize(y0.size());
    for (auto& v : w.data) v = u(g);

    auto state = layer.state();
    for (auto& p : state)
        if (p.param->trainable()) std::fill(p.param->grad.begin(), p.param->grad.end(), 0.0);
    layer.forward(x, true);
    const auto gx = layer.backward(w);

    std::vector<double*> coords;
    std::vector<double> analytic;
    for (auto i : sample_indices(x.size(), per_tensor, g())) {
        coords.push_back(&x.data[i]);
        analytic.push_back(gx.data[i]);
    }
    for (auto& p : state) {
        if (!p.param->trainable()) continue;
        for (auto i : sample_indices(p.param->value.size(), per_tensor, g())) {
            coords.push_back(&p.param->value[i]);
            analytic.push_back(p.param->grad[i]);
        }
    }
    std::vector<std::uint8_t> pattern;
    auto loss = [&] {
        pattern.clear();
        append_kink_pattern(layer, x, pattern);
        const auto y = layer.forward(x, true);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += w.data[i] * y.data[i];
        return s;
    };
    return compare(coords, analytic, loss, pattern, h, skip_kinks);
}

GradCheck check_model(nn::Model<double>& model, nn::Tensor<double> x, const std::vector<double>& targets, std::uint64_t seed,
                      double h, std::size_t per_tensor, bool skip_kinks) {
    std::mt19937_64 g(seed);
    model.zero_grad();
    const auto p = model.forward(x, true);
    auto bce = nn::bce_loss<double>(p.data, targets);
    nn::Tensor<double> gl;
    gl.shape = p.shape;
    gl.data = bce.grad_logits;
    const auto gx = model.backward_from_logits(gl);

    std::vector<double*> coords;
    std::vector<double> analytic;
    for (auto i : sample_indices(x.size(), per_tensor, g())) {
        coords.push_back(&x.data[i]);
        analytic.push_back(gx.data[i]);
    }
    for (auto& np : model.parameters()) {
        for (auto i : sample_indices(np.param->value.size(), per_tensor, g())) {
            coords.push_back(&np.param->value[i]);
            analytic.push_back(np.param->grad[i]);
        }
    }
    // Reference loss: plain mean binary cross-entropy, from a layer-by-layer pass.
    std::vector<std::uint8_t> pattern;
    auto loss = [&] {
        pattern.clear();
        nn::Tensor<double> a = x;
        for (const auto& layer : model.layers()) {
            append_kink_pattern(*layer, a, pattern);
            a = layer->forward(a, true);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            s -= targets[i] * std::log(a.data[i]) + (1.0 - targets[i]) * std::log(1.0 - a.data[i]);
        return s / static_cast<double>(a.size());
    };
    return compare(coords, analytic, loss, pattern, h, skip_kinks);
}

void put_i16(std::vector<std::uint8_t>& out, std::int16_t v) {
    const auto u = static_cast<std::uint16_t>(v);
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
}

void put_i24(std::vector<std::uint8_t>& out, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 3; ++b) out.push_back(static_cast<std::uint8_t>((u >> (8 * b)) & 0xFF));
}

void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>((u >> (8 * b)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    put_i32(out, static_cast<std::int32_t>(u));
}

namespace {

void put_u16(std::vector<std::uint8_t>& o, std::uint16_t v) { put_i16(o, static_cast<std::int16_t>(v)); }
void put_u32(std::vector<std::uint8_t>& o, std::uint32_t v) { put_i32(o, static_cast<std::int32_t>(v)); }
void put_tag(std::vector<std::uint8_t>& o, const char* t) { o.insert(o.end(), t, t + 4); }

}  // namespace

std::vector<std::uint8_t> build_wav(const WavSpec& s, const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> fmt;
    put_u16(fmt, s.format_tag);
    put_u16(fmt, s.channels);
    put_u32(fmt, s.sample_rate);
    const std::uint16_t block = static_cast<std::uint16_t>(s.channels * s.bits / 8);
    put_u32(fmt, s.sample_rate * block);
    put_u16(fmt, block);
    put_u16(fmt, s.bits);
    if (s.format_tag == 0xFFFE) {
        put_u16(fmt, 22);
        put_u16(fmt, s.bits);
        put_u32(fmt, 0);
        put_u16(fmt, s.sub_format);
        // Remainder of the KSDATAFORMAT GUID.
        const std::uint8_t tail[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
        fmt.insert(fmt.end(), tail, tail + 14);
    }
    std::vector<std::uint8_t> body;
    put_tag(body, "WAVE");
    put_tag(body, "fmt ");
    put_u32(body, static_cast<std::uint32_t>(fmt.size()));
    body.insert(body.end(), fmt.begin(), fmt.end());
    if (s.extra_chunk) {
        put_tag(body, "LIST");
        put_u32(body, 5);
        const char junk[6] = {'I', 'N', 'F', 'O', 'x', 0};  // odd size plus pad byte
        body.insert(body.end(), junk, junk + 6);
    }
    put_tag(body, "data");
    put_u32(body, static_cast<std::uint32_t>(payload.size()));
    body.insert(body.end(), payload.begin(), payload.end());
    if (payload.size() % 2) body.push_back(0);
    std::vector<std::uint8_t> out;
    put_tag(out, "RIFF");
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

TempDir::TempDir(const std::string& prefix) {
    std::string tmpl = (std::filesystem::temp_directory_path() / (prefix + "_XXXXXX")).string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::vector<LabeledSegment> label_segments(const SyntheticClip& synth, const std::string& subject) {
    std::vector<LabeledSegment> out;
    for (auto& seg : segment_clip(synth.clip)) {
        auto labelled = try_assign_labels(std::move(seg), synth.labels);
        if (labelled) out.push_back({subject, "1", "synthetic", std::move(*labelled)});
    }
    return out;
}

std::vector<LabeledSegment> channel_dataset(int subjects, double seconds_per_class_run, int runs_per_class, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::vector<LabeledSegment> all;
    for (int s = 0; s < subjects; ++s) {
        std::vector<SynthInterval> plan;
        for (int r = 0; r < runs_per_class; ++r) {
            plan.push_back({BreathClass::Pause, seconds_per_class_run});
            plan.push_back({r % 2 ? BreathClass::NoseExhale : BreathClass::NoseInhale, seconds_per_class_run});
            plan.push_back({r % 2 ? BreathClass::MouthExhale : BreathClass::MouthInhale, seconds_per_class_run});
        }
        // Same construction per subject; order shuffled with the subject's stream.
        for (std::size_t i = plan.size(); i > 1; --i) std::swap(plan[i - 1], plan[g() % i]);
        const std::string subject = "synth" + std::to_string(s + 1);
        const auto clip = synthesize_clip(plan, g(), SynthStyle{}, subject + "_clip");
        auto segs = label_segments(clip, subject);
        std::move(segs.begin(), segs.end(), std::back_inserter(all));
    }
    return all;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

}  // namespace oracle
