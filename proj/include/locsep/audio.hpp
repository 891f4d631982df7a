#pragma once

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "locsep/common.hpp"

namespace locsep {

// Synchronized multi-microphone sample block. Analysis paths run in double;
// WAV I/O quantizes to the requested encoding.
struct MultichannelAudio {
    Eigen::MatrixXd samples;  // channels x frames, in [-1, 1]
    int sample_rate = 0;

    int channels() const { return static_cast<int>(samples.rows()); }
    Eigen::Index frames() const { return samples.cols(); }
    double duration() const {
        return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
    }
};

enum class WavEncoding { Pcm16, Float32 };

namespace wav_detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t rd_u16(const unsigned char* p) { return p[0] | (p[1] << 8); }
inline void wr_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(x & 0xff); v.push_back((x >> 8) & 0xff);
    v.push_back((x >> 16) & 0xff); v.push_back((x >> 24) & 0xff);
}
inline void wr_u16(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(x & 0xff); v.push_back((x >> 8) & 0xff);
}

}  // namespace wav_detail

inline MultichannelAudio load_wav(const std::string& path) {
    using namespace wav_detail;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_wav: cannot open " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
        std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
        throw FormatError("load_wav: not a RIFF/WAVE file: " + path);

    std::uint16_t fmt_tag = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_len = 0;
    std::size_t pos = 12;
    while (pos + 8 <= raw.size()) {
        const std::uint32_t chunk_len = rd_u32(raw.data() + pos + 4);
        const unsigned char* body = raw.data() + pos + 8;
        if (pos + 8 + chunk_len > raw.size()) {
            if (std::memcmp(raw.data() + pos, "data", 4) == 0)
                throw FormatError("load_wav: truncated data chunk in " + path);
            throw FormatError("load_wav: truncated chunk in " + path);
        }
        if (std::memcmp(raw.data() + pos, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw FormatError("load_wav: short fmt chunk in " + path);
            fmt_tag = rd_u16(body);
            channels = rd_u16(body + 2);
            rate = rd_u32(body + 4);
            bits = rd_u16(body + 14);
        } else if (std::memcmp(raw.data() + pos, "data", 4) == 0) {
            data = body;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (fmt_tag == 0 || data == nullptr) throw FormatError("load_wav: missing fmt/data chunk in " + path);
    if (channels == 0) throw FormatError("load_wav: zero channels in " + path);

    const bool pcm16 = (fmt_tag == 1 && bits == 16);
    const bool f32 = (fmt_tag == 3 && bits == 32);
    if (!pcm16 && !f32)
        throw FormatError("load_wav: unsupported encoding (tag=" + std::to_string(fmt_tag) +
                          ", bits=" + std::to_string(bits) + ") in " + path);

    const std::uint32_t bytes_per_sample = bits / 8;
    const std::uint32_t frame_bytes = bytes_per_sample * channels;
    if (data_len % frame_bytes != 0)
        throw FormatError("load_wav: data chunk not a whole number of frames in " + path);
    const std::uint32_t frames = data_len / frame_bytes;

    MultichannelAudio out;
    out.sample_rate = static_cast<int>(rate);
    out.samples.resize(channels, frames);
    for (std::uint32_t i = 0; i < frames; ++i) {
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + (std::size_t(i) * channels + c) * bytes_per_sample;
            if (pcm16) {
                const std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
                out.samples(c, i) = static_cast<double>(s) / 32768.0;
            } else {
                float v;
                std::uint32_t u = rd_u32(p);
                std::memcpy(&v, &u, 4);
                out.samples(c, i) = static_cast<double>(v);
            }
        }
    }
    return out;
}

inline void save_wav(const MultichannelAudio& audio, const std::string& path,
                     WavEncoding encoding = WavEncoding::Float32) {
    using namespace wav_detail;
    if (!audio.samples.allFinite()) throw NumericError("save_wav: non-finite samples");
    const int channels = audio.channels();
    const Eigen::Index frames = audio.frames();
    const bool f32 = encoding == WavEncoding::Float32;
    const std::uint16_t bits = f32 ? 32 : 16;
    const std::uint32_t frame_bytes = channels * bits / 8;
    const std::uint32_t data_len = static_cast<std::uint32_t>(frames) * frame_bytes;

    std::vector<unsigned char> out;
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    wr_u32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    wr_u32(out, 16);
    wr_u16(out, f32 ? 3 : 1);
    wr_u16(out, static_cast<std::uint16_t>(channels));
    wr_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
    wr_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * frame_bytes);
    wr_u16(out, static_cast<std::uint16_t>(frame_bytes));
    wr_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    wr_u32(out, data_len);
    for (Eigen::Index i = 0; i < frames; ++i) {
        for (int c = 0; c < channels; ++c) {
            const double v = audio.samples(c, i);
            if (f32) {
                const float x = static_cast<float>(v);
                std::uint32_t u;
                std::memcpy(&u, &x, 4);
                wr_u32(out, u);
            } else {
                const double clipped = std::clamp(v, -1.0, 1.0);
                const int q = static_cast<int>(std::lround(clipped * 32767.0));
                wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
            }
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_wav: cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("save_wav: write failed for " + path);
}

// ---------------------------------------------------------------------------
// FIR design (Kaiser-windowed sinc) and filtering helpers.

namespace fir {

inline double bessel_i0(double x) {
    // Series expansion; converges fast for the beta range used here.
    double sum = 1.0, term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (k * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Lowpass prototype, odd length, linear phase. cutoff in normalized
// frequency (cycles/sample), i.e. fc_hz / fs.
inline std::vector<double> kaiser_lowpass(double cutoff, int taps, double beta) {
    if (taps % 2 == 0) ++taps;
    std::vector<double> h(taps);
    const int mid = taps / 2;
    const double denom = bessel_i0(beta);
    for (int n = 0; n < taps; ++n) {
        const int k = n - mid;
        const double sinc = (k == 0) ? 2.0 * cutoff
                                     : std::sin(2.0 * kPi * cutoff * k) / (kPi * k);
        const double r = 2.0 * n / (taps - 1) - 1.0;
        const double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
        h[n] = sinc * w;
    }
    return h;
}

inline std::vector<double> kaiser_highpass(double cutoff, int taps, double beta) {
    auto h = kaiser_lowpass(cutoff, taps, beta);
    for (auto& v : h) v = -v;
    h[h.size() / 2] += 1.0;  // spectral inversion
    return h;
}

// Convolve and compensate the (taps-1)/2 group delay so output aligns with
// input and keeps its length.
inline Eigen::MatrixXd filter_delay_compensated(const Eigen::MatrixXd& x,
                                                const std::vector<double>& h) {
    const int delay = static_cast<int>(h.size() / 2);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    const Eigen::Index n = x.cols();
    for (Eigen::Index out = 0; out < n; ++out) {
        const Eigen::Index center = out + delay;  // index into zero-padded conv output
        for (std::size_t k = 0; k < h.size(); ++k) {
            const Eigen::Index in = center - static_cast<Eigen::Index>(k);
            if (in < 0 || in >= n) continue;
            y.col(out).noalias() += h[k] * x.col(in);
        }
    }
    return y;
}

}  // namespace fir

// Filter bank constants for the 44.1 kHz front end. Both filters share the
// same length, hence the same group delay; after compensation the two bands
// stay sample-aligned.
struct BandSplitDesign {
    std::vector<double> lowpass;   // speech band, passband through 8 kHz
    std::vector<double> highpass;  // tracking band, passband 18-20 kHz
    int sample_rate;
};

inline const BandSplitDesign& band_split_design(int sample_rate = 44100) {
    static const BandSplitDesign design = [] {
        BandSplitDesign d;
        d.sample_rate = 44100;
        // 60 dB stopband (beta 5.653). Lowpass transitions 8->10.5 kHz,
        // highpass 15.5->17.5 kHz; the chirp band 18-20 kHz passes intact.
        const double beta = 5.653;
        d.lowpass = fir::kaiser_lowpass(9250.0 / 44100.0, 181, beta);
        d.highpass = fir::kaiser_highpass(16500.0 / 44100.0, 181, beta);
        return d;
    }();
    if (sample_rate != design.sample_rate)
        throw ConfigError("band_split: requires 44100 Hz input, got " + std::to_string(sample_rate));
    return design;
}

struct BandSplitResult {
    MultichannelAudio speech_band;    // 0-8 kHz content, still at 44.1 kHz
    MultichannelAudio tracking_band;  // 18-20 kHz content at 44.1 kHz
};

inline BandSplitResult band_split(const MultichannelAudio& audio) {
    if (audio.sample_rate != 44100)
        throw ConfigError("band_split: expects 44.1 kHz input (20 kHz chirp content), got " +
                          std::to_string(audio.sample_rate) + " Hz");
    const auto& d = band_split_design(audio.sample_rate);
    BandSplitResult r;
    r.speech_band.sample_rate = audio.sample_rate;
    r.tracking_band.sample_rate = audio.sample_rate;
    r.speech_band.samples = fir::filter_delay_compensated(audio.samples, d.lowpass);
    r.tracking_band.samples = fir::filter_delay_compensated(audio.samples, d.highpass);
    return r;
}

// ---------------------------------------------------------------------------
// Rational polyphase resampler, 44.1 kHz -> 16 kHz (L=160, M=441).

class Resampler44to16 {
  public:
    static constexpr int kUp = 160;
    static constexpr int kDown = 441;

    Resampler44to16() {
        // Prototype at the upsampled rate (7.056 MHz): passband to 8 kHz
        // (the new Nyquist), 60 dB stopband from ~10 kHz.
        const int taps_per_phase = 80;
        const int total = kUp * taps_per_phase;
        proto_ = fir::kaiser_lowpass(8000.0 / (44100.0 * kUp), total + 1, 5.653);
        proto_.resize(total);  // drop trailing tap so phases are uniform
        for (auto& v : proto_) v *= kUp;  // compensate upsampling gain
        taps_per_phase_ = taps_per_phase;
    }

    Eigen::VectorXd process(const Eigen::VectorXd& x) const {
        const Eigen::Index n_in = x.size();
        const Eigen::Index n_out = (n_in * kUp + kDown - 1) / kDown;
        Eigen::VectorXd y(n_out);
        for (Eigen::Index m = 0; m < n_out; ++m) {
            // Output sample m sits at upsampled index m*441; reading is offset
            // by the prototype center so the resampler is zero-delay overall.
            const std::int64_t up_idx = static_cast<std::int64_t>(m) * kDown;
            const std::int64_t base = up_idx / kUp + taps_per_phase_ / 2;
            const int phase = static_cast<int>(up_idx % kUp);
            double acc = 0.0;
            for (int t = 0; t < taps_per_phase_; ++t) {
                const std::int64_t in = base - t;
                if (in < 0 || in >= n_in) continue;
                acc += proto_[static_cast<std::size_t>(phase + kUp * t)] * x[in];
            }
            y[m] = acc;
        }
        return y;
    }

  private:
    std::vector<double> proto_;
    int taps_per_phase_;
};

inline MultichannelAudio resample_to_16k(const MultichannelAudio& audio) {
    if (audio.sample_rate != 44100)
        throw ConfigError("resample_to_16k: expects 44.1 kHz input, got " +
                          std::to_string(audio.sample_rate));
    static const Resampler44to16 rs;
    MultichannelAudio out;
    out.sample_rate = 16000;
    const Eigen::Index n_out = (audio.frames() * Resampler44to16::kUp + Resampler44to16::kDown - 1) /
                               Resampler44to16::kDown;
    out.samples.resize(audio.channels(), n_out);
    for (int c = 0; c < audio.channels(); ++c)
        out.samples.row(c) = rs.process(audio.samples.row(c).transpose()).transpose();
    return out;
}

}  // namespace locsep
