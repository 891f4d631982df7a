#pragma once

#include "locsep/audio.hpp"
#include "locsep/fft.hpp"

namespace locsep {

struct StftConfig {
    int fft_size = 512;
    double hop_s = 0.010;
    double window_s = 0.032;
    int sample_rate = 16000;

    int hop_samples() const { return static_cast<int>(std::lround(hop_s * sample_rate)); }
    int window_samples() const { return static_cast<int>(std::lround(window_s * sample_rate)); }
    int freq_bins() const { return fft_size / 2 + 1; }
    double freq_resolution() const { return static_cast<double>(sample_rate) / fft_size; }

    void validate() const {
        if (window_samples() > fft_size)
            throw ConfigError("StftConfig: window longer than fft_size");
        if (hop_samples() <= 0 || hop_samples() >= window_samples())
            throw ConfigError("StftConfig: hop must be positive and shorter than the window");
    }
};

// Per-channel complex TF grid, bins(channel) is freq_bins x time_frames.
struct ComplexSpectrogram {
    std::vector<Eigen::MatrixXcd> bins;
    double freq_resolution = 0.0;
    double hop = 0.0;
    double window_len = 0.0;
    int sample_rate = 0;
    int fft_size = 0;

    int channels() const { return static_cast<int>(bins.size()); }
    Eigen::Index freq_bins() const { return bins.empty() ? 0 : bins[0].rows(); }
    Eigen::Index frames() const { return bins.empty() ? 0 : bins[0].cols(); }
};

inline std::vector<double> hamming_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
    return w;
}

// Frame t covers samples [t*hop, t*hop + window_len). Signals shorter than
// one window produce an empty (0-frame) spectrogram.
inline ComplexSpectrogram stft(const MultichannelAudio& audio, const StftConfig& cfg = {}) {
    cfg.validate();
    if (audio.sample_rate != cfg.sample_rate)
        throw ConfigError("stft: audio rate " + std::to_string(audio.sample_rate) +
                          " does not match config rate " + std::to_string(cfg.sample_rate));
    const int win = cfg.window_samples();
    const int hop = cfg.hop_samples();
    const Eigen::Index n = audio.frames();
    const Eigen::Index n_frames = n >= win ? (n - win) / hop + 1 : 0;
    const auto w = hamming_window(win);

    ComplexSpectrogram spec;
    spec.freq_resolution = cfg.freq_resolution();
    spec.hop = cfg.hop_s;
    spec.window_len = cfg.window_s;
    spec.sample_rate = cfg.sample_rate;
    spec.fft_size = cfg.fft_size;
    spec.bins.resize(audio.channels());
    std::vector<double> buf(cfg.fft_size);
    for (int c = 0; c < audio.channels(); ++c) {
        spec.bins[c].resize(cfg.freq_bins(), n_frames);
        for (Eigen::Index t = 0; t < n_frames; ++t) {
            std::fill(buf.begin(), buf.end(), 0.0);
            const Eigen::Index off = t * hop;
            for (int i = 0; i < win; ++i) buf[i] = audio.samples(c, off + i) * w[i];
            const auto bins = rfft(buf);
            for (int k = 0; k < cfg.freq_bins(); ++k) spec.bins[c](k, t) = bins[k];
        }
    }
    return spec;
}

// Weighted overlap-add synthesis normalized by the summed squared window.
// Interior samples reconstruct exactly up to float error; edges are tapered
// by partial window coverage.
inline MultichannelAudio istft(const ComplexSpectrogram& spec, const StftConfig& cfg = {}) {
    cfg.validate();
    if (spec.sample_rate != cfg.sample_rate || spec.fft_size != cfg.fft_size ||
        std::abs(spec.hop - cfg.hop_s) > 1e-12 || std::abs(spec.window_len - cfg.window_s) > 1e-12)
        throw ConfigError("istft: spectrogram parameters do not match config");
    const int win = cfg.window_samples();
    const int hop = cfg.hop_samples();
    const Eigen::Index n_frames = spec.frames();
    const Eigen::Index n = n_frames > 0 ? (n_frames - 1) * hop + win : 0;
    const auto w = hamming_window(win);

    MultichannelAudio out;
    out.sample_rate = cfg.sample_rate;
    out.samples = Eigen::MatrixXd::Zero(spec.channels(), n);
    Eigen::VectorXd norm = Eigen::VectorXd::Zero(n);
    for (Eigen::Index t = 0; t < n_frames; ++t)
        for (int i = 0; i < win; ++i) norm[t * hop + i] += w[i] * w[i];

    std::vector<std::complex<double>> bins(cfg.freq_bins());
    for (int c = 0; c < spec.channels(); ++c) {
        for (Eigen::Index t = 0; t < n_frames; ++t) {
            for (int k = 0; k < cfg.freq_bins(); ++k) bins[k] = spec.bins[c](k, t);
            const auto frame = irfft(bins, cfg.fft_size);
            const Eigen::Index off = t * hop;
            for (int i = 0; i < win; ++i) out.samples(c, off + i) += w[i] * frame[i];
        }
    }
    for (Eigen::Index s = 0; s < n; ++s) {
        const double d = norm[s] > 1e-12 ? norm[s] : 1.0;
        out.samples.col(s) /= d;
    }
    return out;
}

// lps(f,t) = log(|Y(f,t)|^2 + eps); the floor keeps silent bins finite.
inline constexpr double kLpsFloor = 1e-10;

inline Eigen::MatrixXd log_power_spectrogram(const ComplexSpectrogram& spec, int channel) {
    if (channel < 0 || channel >= spec.channels())
        throw ConfigError("log_power_spectrogram: channel " + std::to_string(channel) +
                          " out of range");
    return (spec.bins[channel].array().abs2() + kLpsFloor).log().matrix();
}

}  // namespace locsep
