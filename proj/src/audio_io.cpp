#include "breathsense/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>

#include "breathsense/byte_io.hpp"
#include "breathsense/error.hpp"

namespace breathsense {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct WavFormat {
    std::uint16_t tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

bool has_tag(std::span<const std::uint8_t> bytes, std::size_t offset, const char* tag) {
    return bytes.size() >= offset + 4 && std::memcmp(bytes.data() + offset, tag, 4) == 0;
}

WavFormat parse_fmt(std::span<const std::uint8_t> body) {
    if (body.size() < 16) throw Error(ErrorCode::CorruptHeader, "fmt chunk shorter than 16 bytes");
    ByteReader r(body);
    WavFormat f;
    f.tag = r.u16();
    f.channels = r.u16();
    f.sample_rate = r.u32();
    r.u32();  // byte rate
    f.block_align = r.u16();
    f.bits = r.u16();
    if (f.tag == kFormatExtensible) {
        if (body.size() < 26) throw Error(ErrorCode::CorruptHeader, "extensible fmt chunk too short");
        ByteReader ext(body.subspan(24));
        f.tag = ext.u16();  // first two bytes of the subformat GUID
    }
    return f;
}

float decode_sample(const std::uint8_t* p, const WavFormat& f) {
    switch (f.bits) {
        case 16: {
            auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
            return static_cast<float>(v / 32768.0);
        }
        case 24: {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v -= 0x1000000;
            return static_cast<float>(v / 8388608.0);
        }
        case 32: {
            std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                              (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
            if (f.tag == kFormatFloat) {
                float v = std::bit_cast<float>(u);
                if (!std::isfinite(v)) throw Error(ErrorCode::CorruptPayload, "non-finite float sample");
                return std::clamp(v, -1.0f, 1.0f);
            }
            return static_cast<float>(static_cast<std::int32_t>(u) / 2147483648.0);
        }
        default:
            return 0.0f;
    }
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

AudioClip read_wav(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return decode_wav(bytes, path);
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id) {
    if (has_tag(bytes, 4, "ftyp")) throw Error(ErrorCode::UnsupportedEncoding, "MPEG-4 container (M4A), convert to WAV first");
    if (!has_tag(bytes, 0, "RIFF") || !has_tag(bytes, 8, "WAVE")) throw Error(ErrorCode::CorruptHeader, "missing RIFF/WAVE magic");

    ByteReader header(bytes.subspan(4, 4));
    const std::uint32_t riff_size = header.u32();
    if (static_cast<std::uint64_t>(riff_size) + 8 > bytes.size() + 1)  // allow a missing pad byte
        throw Error(ErrorCode::CorruptHeader, "RIFF size exceeds file size");

    std::optional<WavFormat> format;
    std::span<const std::uint8_t> data;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        ByteReader chunk(bytes.subspan(pos, 8));
        std::string id = chunk.str(4);
        const std::uint32_t size = chunk.u32();
        const std::size_t body = pos + 8;
        if (static_cast<std::uint64_t>(body) + size > bytes.size())
            throw Error(ErrorCode::CorruptHeader, "chunk '" + id + "' length exceeds file size");
        if (id == "fmt ") {
            format = parse_fmt(bytes.subspan(body, size));
        } else if (id == "data") {
            data = bytes.subspan(body, size);
            have_data = true;
        }
        pos = body + size + (size & 1u);
    }

    if (!format) throw Error(ErrorCode::CorruptHeader, "no fmt chunk");
    if (!have_data) throw Error(ErrorCode::CorruptHeader, "no data chunk");

    const WavFormat& f = *format;
    const bool pcm_ok = f.tag == kFormatPcm && (f.bits == 16 || f.bits == 24 || f.bits == 32);
    const bool float_ok = f.tag == kFormatFloat && f.bits == 32;
    if (!pcm_ok && !float_ok)
        throw Error(ErrorCode::UnsupportedEncoding,
                    "format tag " + std::to_string(f.tag) + " with " + std::to_string(f.bits) + " bits");
    if (f.channels == 0 || f.sample_rate == 0) throw Error(ErrorCode::CorruptHeader, "zero channels or sample rate");

    const std::size_t bytes_per_sample = f.bits / 8u;
    if (f.block_align != 0 && f.block_align != bytes_per_sample * f.channels)
        throw Error(ErrorCode::CorruptHeader, "block alignment inconsistent with channels and bit depth");
    const std::size_t frame_bytes = bytes_per_sample * f.channels;
    const std::size_t frames = data.size() / frame_bytes;
    if (frames == 0) throw Error(ErrorCode::EmptyAudio, "data chunk holds no samples");

    AudioClip clip;
    clip.sample_rate = static_cast<int>(f.sample_rate);
    clip.channels = f.channels;
    clip.source_id = std::move(source_id);
    clip.samples.resize(frames * f.channels);
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = decode_sample(data.data() + i * bytes_per_sample, f);
    return clip;
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip) {
    const auto n = static_cast<std::uint32_t>(clip.samples.size());
    const auto channels = static_cast<std::uint16_t>(clip.channels);
    ByteWriter w;
    w.raw("RIFF");
    w.u32(36 + n * 2);
    w.raw("WAVE");
    w.raw("fmt ");
    w.u32(16);
    w.u16(kFormatPcm);
    w.u16(channels);
    w.u32(static_cast<std::uint32_t>(clip.sample_rate));
    w.u32(static_cast<std::uint32_t>(clip.sample_rate) * channels * 2);
    w.u16(static_cast<std::uint16_t>(channels * 2));
    w.u16(16);
    w.raw("data");
    w.u32(n * 2);
    for (float s : clip.samples) {
        const double scaled = std::round(static_cast<double>(s) * 32768.0);
        w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
    }
    return std::move(w).take();
}

void write_wav(const std::string& path, const AudioClip& clip) {
    write_file_bytes(path, encode_wav_pcm16(clip));
}

AudioClip downmix_mono(const AudioClip& clip) {
    if (clip.channels < 1) throw Error(ErrorCode::InvalidArgument, "channel count must be >= 1");
    if (clip.channels == 1) return clip;
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.channels = 1;
    out.source_id = clip.source_id;
    const std::size_t ch = static_cast<std::size_t>(clip.channels);
    out.samples.resize(clip.frames());
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < ch; ++c) sum += clip.samples[i * ch + c];
        out.samples[i] = static_cast<float>(sum / static_cast<double>(ch));
    }
    return out;
}

namespace {

constexpr int kTapsPerPhase = 64;
constexpr double kCutoffFraction = 0.46;  // of the lower rate; Kaiser transition ends near Nyquist
constexpr double kKaiserBeta = 7.857;     // ~80 dB stopband
constexpr std::size_t kMaxTablePhases = 2048;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

class SincKernel {
public:
    SincKernel(double rho)
        : cutoff_(kCutoffFraction * rho), half_width_(0.5 * kTapsPerPhase / rho),
          norm_(1.0 / std::cyl_bessel_i(0.0, kKaiserBeta)) {}

    double half_width() const { return half_width_; }

    double operator()(double tau) const {
        const double x = tau / half_width_;
        if (std::abs(x) >= 1.0) return 0.0;
        const double window = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) * norm_;
        return 2.0 * cutoff_ * sinc(2.0 * cutoff_ * tau) * window;
    }

private:
    double cutoff_;
    double half_width_;
    double norm_;
};

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
    if (clip.channels != 1) throw Error(ErrorCode::InvalidArgument, "resample expects mono input");
    if (clip.sample_rate <= 0 || target_rate <= 0) throw Error(ErrorCode::InvalidArgument, "sample rates must be positive");
    if (clip.sample_rate == target_rate) return clip;

    const long long g = std::gcd(clip.sample_rate, target_rate);
    const long long up = target_rate / g;
    const long long down = clip.sample_rate / g;
    const double rho = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
    const SincKernel kernel(rho);

    const auto in_len = static_cast<long long>(clip.samples.size());
    const long long out_len = (2 * in_len * up + down) / (2 * down);  // round half up
    const long long reach = static_cast<long long>(std::ceil(kernel.half_width()));
    const long long taps = 2 * reach + 1;

    // Polyphase table: phase p holds kernel(p/up - j) for j in [-reach, reach].
    std::vector<double> table;
    const bool tabulated = static_cast<std::size_t>(up) <= kMaxTablePhases;
    if (tabulated) {
        table.resize(static_cast<std::size_t>(up * taps));
        for (long long p = 0; p < up; ++p)
            for (long long j = -reach; j <= reach; ++j)
                table[static_cast<std::size_t>(p * taps + j + reach)] =
                    kernel(static_cast<double>(p) / static_cast<double>(up) - static_cast<double>(j));
    }

    AudioClip out;
    out.sample_rate = target_rate;
    out.channels = 1;
    out.source_id = clip.source_id;
    out.samples.resize(static_cast<std::size_t>(out_len));
    for (long long n = 0; n < out_len; ++n) {
        const long long pos = n * down;
        const long long base = pos / up;
        const long long phase = pos % up;
        const long long lo = std::max(-reach, -base);
        const long long hi = std::min(reach, in_len - 1 - base);
        double acc = 0.0;
        for (long long j = lo; j <= hi; ++j) {
            const double h = tabulated ? table[static_cast<std::size_t>(phase * taps + j + reach)]
                                       : kernel(static_cast<double>(phase) / static_cast<double>(up) - static_cast<double>(j));
            acc += h * clip.samples[static_cast<std::size_t>(base + j)];
        }
        out.samples[static_cast<std::size_t>(n)] = static_cast<float>(acc);
    }
    return out;
}

AudioClip canonicalize(const AudioClip& clip) {
    return resample(downmix_mono(clip), kCanonicalRate);
}

}  // namespace breathsense
