#pragma once

#include <filesystem>

#include "locsep/audio.hpp"

namespace test_helpers {

inline locsep::MultichannelAudio tone(double freq_hz, double duration_s, int sample_rate,
                                      int channels = 1, double amplitude = 1.0) {
    locsep::MultichannelAudio a;
    a.sample_rate = sample_rate;
    const Eigen::Index n = static_cast<Eigen::Index>(std::lround(duration_s * sample_rate));
    a.samples.resize(channels, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = amplitude * std::sin(2.0 * locsep::kPi * freq_hz * i / sample_rate);
        for (int c = 0; c < channels; ++c) a.samples(c, i) = v;
    }
    return a;
}

inline double rms(const Eigen::VectorXd& x) {
    return std::sqrt(x.squaredNorm() / std::max<Eigen::Index>(1, x.size()));
}

// RMS over the interior, skipping `trim` samples at both ends.
inline double interior_rms(const Eigen::VectorXd& x, Eigen::Index trim) {
    return rms(x.segment(trim, x.size() - 2 * trim).eval());
}

inline std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace test_helpers
