#pragma once

#include "locsep/geometry.hpp"
#include "locsep/stft.hpp"

namespace locsep {

// Per-TF-bin indicator that the target dominates interference+noise.
struct BinaryMask {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // freq_bins x frames

    Eigen::Index freq_bins() const { return mask.rows(); }
    Eigen::Index frames() const { return mask.cols(); }
};

// mask(f,t) = 1 iff |target| > |residual| (strict; ties count as interference
// dominant).
inline BinaryMask oracle_ibm(const ComplexSpectrogram& target_spec,
                             const ComplexSpectrogram& residual_spec, int channel) {
    if (channel < 0 || channel >= target_spec.channels() || channel >= residual_spec.channels())
        throw ConfigError("oracle_ibm: channel out of range");
    const auto& t = target_spec.bins[channel];
    const auto& r = residual_spec.bins[channel];
    if (t.rows() != r.rows() || t.cols() != r.cols())
        throw ConfigError("oracle_ibm: spectrogram shapes differ");
    BinaryMask m;
    m.mask = t.array().abs() > r.array().abs();
    return m;
}

inline BinaryMask intersect_masks(const std::vector<BinaryMask>& per_mic) {
    if (per_mic.empty()) throw ConfigError("intersect_masks: empty input");
    BinaryMask out = per_mic.front();
    for (std::size_t i = 1; i < per_mic.size(); ++i) {
        if (per_mic[i].mask.rows() != out.mask.rows() || per_mic[i].mask.cols() != out.mask.cols())
            throw ConfigError("intersect_masks: shape mismatch");
        out.mask = out.mask.array() && per_mic[i].mask.array();
    }
    return out;
}

inline BinaryMask all_ones_mask(Eigen::Index freq_bins, Eigen::Index frames) {
    BinaryMask m;
    m.mask.setConstant(freq_bins, frames, true);
    return m;
}

struct CovarianceMatrix {
    Eigen::MatrixXcd R;  // Hermitian PSD, M x M
    int snapshot_count = 0;
};

inline constexpr double kDiagonalLoading = 1e-6;

// Average of snapshot outer products over masked frames at one frequency bin,
// with diagonal loading delta * trace(R)/M.
inline CovarianceMatrix bin_covariance(const ComplexSpectrogram& spec, Eigen::Index freq_bin,
                                       Eigen::Index frame_begin, Eigen::Index frame_end,
                                       const BinaryMask& mask) {
    const int m_ch = spec.channels();
    CovarianceMatrix cov;
    cov.R = Eigen::MatrixXcd::Zero(m_ch, m_ch);
    Eigen::VectorXcd x(m_ch);
    for (Eigen::Index t = frame_begin; t < frame_end && t < spec.frames(); ++t) {
        if (!mask.mask(freq_bin, t)) continue;
        for (int c = 0; c < m_ch; ++c) x[c] = spec.bins[c](freq_bin, t);
        cov.R.noalias() += x * x.adjoint();
        ++cov.snapshot_count;
    }
    if (cov.snapshot_count > 0) {
        cov.R /= static_cast<double>(cov.snapshot_count);
        cov.R += (kDiagonalLoading * cov.R.trace().real() / m_ch) *
                 Eigen::MatrixXcd::Identity(m_ch, m_ch);
    }
    return cov;
}

// Narrowband MUSIC pseudo-spectrum over the azimuth grid at one frequency:
// p(theta) = 1 / (a^H R_N R_N^H a), max-normalized. Evaluated through the
// signal-subspace complement (steering entries are unit modulus, so
// a^H a = M exactly).
inline Eigen::VectorXd music_spectrum(const CovarianceMatrix& cov, const ArrayGeometry& geom,
                                      double freq_hz, int signal_dim = 1,
                                      const Eigen::VectorXd* angle_grid = nullptr) {
    const int m_ch = static_cast<int>(cov.R.rows());
    if (signal_dim < 1 || signal_dim >= m_ch)
        throw ConfigError("music_spectrum: signal_dim must lie in [1, M)");
    if ((cov.R - cov.R.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, cov.R.cwiseAbs().maxCoeff()))
        throw NumericError("music_spectrum: covariance not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov.R);
    if (eig.info() != Eigen::Success)
        throw NumericError("music_spectrum: eigendecomposition failed (trace=" +
                           std::to_string(cov.R.trace().real()) + ")");
    const Eigen::MatrixXcd signal_basis = eig.eigenvectors().rightCols(signal_dim);

    Eigen::VectorXd grid;
    if (angle_grid == nullptr) {
        grid.resize(181);
        for (int i = 0; i < 181; ++i) grid[i] = static_cast<double>(i);
    } else {
        grid = *angle_grid;
    }
    Eigen::VectorXd p(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Eigen::VectorXcd a = steering_vector(geom, grid[i], freq_hz);
        const double denom =
            std::max(static_cast<double>(m_ch) - (signal_basis.adjoint() * a).squaredNorm(), 1e-12);
        p[i] = 1.0 / denom;
    }
    const double peak = p.maxCoeff();
    if (peak > 0.0) p /= peak;
    return p;
}

// Frequency x angle aggregation of per-bin MUSIC spectra. The frequency axis
// is the 103 STFT bins covering 800 Hz - 4 kHz at the 16 kHz / 512-point
// defaults (bins 26..128, 31.25 Hz apart).
struct MusicProfile {
    Eigen::MatrixXd values;     // freq rows x angle cols, >= 0
    Eigen::VectorXd freq_axis;  // Hz
    Eigen::VectorXd angle_axis; // degrees
    double timestamp = 0.0;
};

struct MusicProfileConfig {
    int first_bin = 26;   // 812.5 Hz
    int last_bin = 128;   // 4000 Hz
    int angle_count = 181;
    int signal_dim = 1;
    double snapshot_window_s = 0.300;
    int min_snapshots = 1;
};

inline MusicProfile masked_music_profile(const ComplexSpectrogram& spec16k, const BinaryMask& mask,
                                         const ArrayGeometry& geom, Eigen::Index frame_begin,
                                         Eigen::Index frame_end,
                                         const MusicProfileConfig& cfg = {}) {
    if (mask.freq_bins() != spec16k.freq_bins() || mask.frames() != spec16k.frames())
        throw ConfigError("masked_music_profile: mask shape does not match spectrogram");
    const int n_rows = cfg.last_bin - cfg.first_bin + 1;
    MusicProfile prof;
    prof.values = Eigen::MatrixXd::Zero(n_rows, cfg.angle_count);
    prof.freq_axis.resize(n_rows);
    prof.angle_axis.resize(cfg.angle_count);
    for (int i = 0; i < cfg.angle_count; ++i)
        prof.angle_axis[i] = 180.0 * i / (cfg.angle_count - 1);
    for (int r = 0; r < n_rows; ++r) {
        const int bin = cfg.first_bin + r;
        prof.freq_axis[r] = bin * spec16k.freq_resolution;
        const auto cov = bin_covariance(spec16k, bin, frame_begin, frame_end, mask);
        if (cov.snapshot_count < cfg.min_snapshots) continue;  // empty bin: row stays zero
        prof.values.row(r) =
            music_spectrum(cov, geom, prof.freq_axis[r], cfg.signal_dim, &prof.angle_axis)
                .transpose();
    }
    return prof;
}

// Highest peak of the column sums across frequency rows; ties break toward
// the smaller angle. All-zero profiles carry no estimate.
inline std::optional<double> profile_peak_aoa(const MusicProfile& prof) {
    if (prof.values.size() == 0 || prof.values.maxCoeff() <= 0.0) return std::nullopt;
    const Eigen::VectorXd sums = prof.values.colwise().sum();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < sums.size(); ++i)
        if (sums[i] > sums[best]) best = i;
    return prof.angle_axis[best];
}

}  // namespace locsep
