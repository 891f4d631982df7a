#pragma once

#include "locsep/audio.hpp"
#include "locsep/fft.hpp"
#include "locsep/geometry.hpp"

#include <optional>

namespace locsep {

// Periodic linear FMCW sweep, 18-20 kHz over 40 ms. Two speakers transmit
// the same chirp offset by half a period so their echoes interleave.
struct ChirpConfig {
    double f_min = 18000.0;
    double f_max = 20000.0;
    double period_s = 0.040;
    int sample_rate = 44100;
    std::vector<double> speaker_offsets_s = {0.0, 0.020};
    std::vector<Eigen::Vector3d> speaker_positions = {{-0.06, 0.0, 0.0}, {0.14, 0.0, 0.0}};

    double bandwidth() const { return f_max - f_min; }
    int period_samples() const { return static_cast<int>(std::lround(period_s * sample_rate)); }

    void validate() const {
        if (f_max <= f_min) throw ConfigError("ChirpConfig: f_max must exceed f_min");
        if (f_max > sample_rate / 2.0)
            throw ConfigError("ChirpConfig: chirp band exceeds Nyquist");
        for (double o : speaker_offsets_s)
            if (o < 0.0 || o >= period_s)
                throw ConfigError("ChirpConfig: speaker offset outside [0, period)");
        if (speaker_offsets_s.empty())
            throw ConfigError("ChirpConfig: need at least one speaker offset");
        if (speaker_positions.size() < speaker_offsets_s.size())
            throw ConfigError("ChirpConfig: fewer speaker positions than offsets");
    }

    // Transmit phase at time t for a speaker starting its sweep at t = 0:
    // phi(t') = 2 pi f_min t' + pi B t'^2 / T with t' = t mod T. Because
    // f_min*T and B*T/2 are integers at the defaults, the waveform is
    // continuous across period boundaries.
    double phase_at(double t) const {
        const double tp = t - std::floor(t / period_s) * period_s;
        return 2.0 * kPi * f_min * tp + kPi * bandwidth() * tp * tp / period_s;
    }
    double chirp_value(double t) const { return std::cos(phase_at(t)); }
};

// One period of the transmitted sweep per speaker (offset applied).
inline std::vector<Eigen::VectorXd> generate_chirp(const ChirpConfig& cfg, int num_periods = 1) {
    cfg.validate();
    const int n = cfg.period_samples() * num_periods;
    std::vector<Eigen::VectorXd> out;
    for (double offset : cfg.speaker_offsets_s) {
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / cfg.sample_rate - offset;
            w[i] = t >= 0.0 ? cfg.chirp_value(t) : 0.0;
        }
        out.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dechirping. Mixing the received tracking band with the conjugate analytic
// transmit chirp turns a path of delay t_d into a complex tone at
// f_b = B * t_d / T. A lowpass rejects the mixing image and the cross-talk
// from the other speaker (whose half-period offset lands at ~1 kHz), then the
// beat is decimated. Beat sample m of a period corresponds to in-sweep time
// t' = m * decim / fs, at which the sweep probes carrier f(t') = f_min + B t'/T.

struct BeatConstants {
    static constexpr int kDecim = 14;          // 44100 / 14 = 3150 Hz beat rate
    static constexpr int kLowpassTaps = 457;   // 60 dB by 800 Hz
    static constexpr double kLowpassCutoffHz = 450.0;
};

struct BeatSignal {
    Eigen::MatrixXcd samples;  // mics x beat samples (one chirp period)
    double sample_rate = 0.0;  // beat-domain rate
    int period_index = 0;
    int speaker_index = 0;
};

// Continuous per-speaker dechirp pipeline: mixes, lowpasses (delay
// compensated) and decimates an arbitrarily chunked input stream. Feeding a
// whole recording in one call and feeding it sample block by sample block
// produce identical output.
class Dechirper {
  public:
    Dechirper(const ChirpConfig& cfg, int speaker_index, int mic_count)
        : cfg_(cfg),
          speaker_index_(speaker_index),
          mic_count_(mic_count),
          lowpass_(fir::kaiser_lowpass(BeatConstants::kLowpassCutoffHz / cfg.sample_rate,
                                       BeatConstants::kLowpassTaps, 5.653)),
          history_(mic_count, Eigen::VectorXcd::Zero(BeatConstants::kLowpassTaps)) {
        cfg_.validate();
        if (speaker_index < 0 || speaker_index >= static_cast<int>(cfg.speaker_offsets_s.size()))
            throw ConfigError("Dechirper: speaker index out of range");
    }

    // Push the next block of tracking-band samples; returns newly completed
    // beat samples (mics x n_new) in stream order.
    Eigen::MatrixXcd push(const Eigen::MatrixXd& block) {
        if (block.rows() != mic_count_) throw ShapeError("Dechirper: mic count mismatch");
        const int delay = BeatConstants::kLowpassTaps / 2;
        const double offset = cfg_.speaker_offsets_s[speaker_index_];
        std::vector<Eigen::VectorXcd> cols;
        for (Eigen::Index i = 0; i < block.cols(); ++i) {
            const double t = static_cast<double>(abs_index_) / cfg_.sample_rate;
            const double phase = cfg_.phase_at(t - offset);
            const std::complex<double> ref_conj(std::cos(phase), -std::sin(phase));
            const int slot = static_cast<int>(abs_index_ % BeatConstants::kLowpassTaps);
            for (int m = 0; m < mic_count_; ++m)
                history_[m][slot] = (t >= offset ? block(m, i) : 0.0) * ref_conj;
            // filtered[n] = sum_k h[k] * mixed[n + delay - k]; emit at the
            // decimated grid once mixed[n + delay] is available.
            const std::int64_t n = abs_index_ - delay;
            if (n >= 0 && n % BeatConstants::kDecim == 0) {
                Eigen::VectorXcd beat(mic_count_);
                for (int m = 0; m < mic_count_; ++m) {
                    std::complex<double> acc(0.0, 0.0);
                    for (int k = 0; k < BeatConstants::kLowpassTaps; ++k) {
                        const std::int64_t idx = n + delay - k;
                        if (idx < 0 || idx > abs_index_) continue;
                        acc += lowpass_[k] * history_[m][idx % BeatConstants::kLowpassTaps];
                    }
                    beat[m] = std::conj(acc);  // conjugate so beats sit at +f_b
                }
                cols.push_back(std::move(beat));
            }
            ++abs_index_;
        }
        Eigen::MatrixXcd out(mic_count_, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = cols[i];
        return out;
    }

    double beat_rate() const { return static_cast<double>(cfg_.sample_rate) / BeatConstants::kDecim; }
    int beats_per_period() const { return cfg_.period_samples() / BeatConstants::kDecim; }
    // Beat-stream index of the first sample of a given period of this speaker.
    int period_start_beat(int period_index) const {
        const int offset_samples = static_cast<int>(
            std::lround(cfg_.speaker_offsets_s[speaker_index_] * cfg_.sample_rate));
        return (period_index * cfg_.period_samples() + offset_samples) / BeatConstants::kDecim;
    }

  private:
    ChirpConfig cfg_;
    int speaker_index_;
    int mic_count_;
    std::vector<double> lowpass_;
    std::vector<Eigen::VectorXcd> history_;
    std::int64_t abs_index_ = 0;
};

// One-shot dechirp of a single period out of a recorded stream. The stream
// must start at transmit time zero and cover the requested period.
inline BeatSignal dechirp(const MultichannelAudio& received, const ChirpConfig& cfg,
                          int period_index, int speaker_index = 0) {
    cfg.validate();
    if (received.sample_rate != cfg.sample_rate)
        throw ConfigError("dechirp: sample rate mismatch");
    const int n_period = cfg.period_samples();
    const double offset = cfg.speaker_offsets_s.at(speaker_index);
    const std::int64_t n0 = period_index * n_period +
                            static_cast<std::int64_t>(std::lround(offset * cfg.sample_rate));
    if (period_index < 0 || n0 + n_period / 2 > received.frames())
        throw ConfigError("dechirp: period " + std::to_string(period_index) +
                          " not covered by received signal (sync beyond half period)");

    Dechirper d(cfg, speaker_index, received.channels());
    // Feed enough of the stream to settle the filter and cover the period.
    const Eigen::Index need = std::min<Eigen::Index>(
        received.frames(), n0 + n_period + BeatConstants::kLowpassTaps);
    Eigen::MatrixXcd beats = d.push(received.samples.leftCols(need));

    BeatSignal out;
    out.sample_rate = d.beat_rate();
    out.period_index = period_index;
    out.speaker_index = speaker_index;
    const int start = d.period_start_beat(period_index);
    const int len = d.beats_per_period();
    if (start + len > beats.cols())
        throw ConfigError("dechirp: received signal too short for period " +
                          std::to_string(period_index));
    out.samples = beats.middleCols(start, len);
    return out;
}

// ---------------------------------------------------------------------------
// 2D MUSIC over range x azimuth.

struct RangeAoAProfile {
    Eigen::MatrixXd values;    // range_bins x angle_bins, >= 0, max-normalized
    Eigen::VectorXd range_axis;
    Eigen::VectorXd angle_axis;
    double timestamp = 0.0;
    int period_index = 0;
    int speaker_index = 0;
};

struct Music2dConfig {
    double range_min = 0.2;
    double range_max = 1.0;
    double range_step = 0.02;
    double angle_min = 0.0;
    double angle_max = 180.0;
    double angle_step = 1.0;
    int taps = 12;        // beat samples per space-time snapshot
    int tap_stride = 4;   // beat samples between taps (keeps beats unaliased)
    int smooth_step = 4;  // snapshot offset stride for sub-band smoothing
    int signal_dim = 2;
    double diagonal_loading = 1e-6;
    double speed_of_sound = kSpeedOfSound;

    int range_bins() const {
        return static_cast<int>(std::lround((range_max - range_min) / range_step)) + 1;
    }
    int angle_bins() const {
        return static_cast<int>(std::lround((angle_max - angle_min) / angle_step)) + 1;
    }
};

// Joint range/azimuth spectrum estimator. Snapshots stack `taps` beat samples
// from all mics, so one chirp period yields enough sub-band shifted copies to
// decorrelate coherent multipath. Steering uses the exact near-field
// round-trip (speaker -> point -> mic) delay per hypothesis, the swept
// carrier frequency at each tap, and the residual video phase term.
class RangeAoAEstimator {
  public:
    RangeAoAEstimator(const ChirpConfig& chirp, const ArrayGeometry& geom,
                      const Music2dConfig& cfg = {}, int speaker_index = 0)
        : chirp_(chirp), geom_(geom), cfg_(cfg), speaker_index_(speaker_index) {
        chirp_.validate();
        geom_.validate();
        if (geom_.mic_count() < 2) throw ConfigError("music_2d: need >= 2 microphones");
        build_grid();
    }

    const Music2dConfig& config() const { return cfg_; }

    RangeAoAProfile estimate(const BeatSignal& beat) const {
        const int mics = static_cast<int>(beat.samples.rows());
        const int n = static_cast<int>(beat.samples.cols());
        if (mics != geom_.mic_count()) throw ShapeError("music_2d: mic count mismatch");
        const int dim = mics * cfg_.taps;
        const int span = (cfg_.taps - 1) * cfg_.tap_stride + 1;
        if (span > n) throw ConfigError("music_2d: beat period shorter than snapshot span");

        // Smoothed covariance over snapshot offsets.
        Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(dim, dim);
        int count = 0;
        Eigen::VectorXcd x(dim);
        for (int o = 0; o + span <= n; o += cfg_.smooth_step) {
            for (int l = 0; l < cfg_.taps; ++l)
                for (int m = 0; m < mics; ++m) x[l * mics + m] = beat.samples(m, o + l * cfg_.tap_stride);
            R.noalias() += x * x.adjoint();
            ++count;
        }
        if (count == 0) throw ConfigError("music_2d: no snapshots available");
        R /= static_cast<double>(count);
        const double tr = R.trace().real();
        if (!(tr > 0.0) || !R.allFinite())
            throw NumericError("music_2d: degenerate beat covariance (trace=" + std::to_string(tr) + ")");
        R += (cfg_.diagonal_loading * tr / dim) * Eigen::MatrixXcd::Identity(dim, dim);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(R);
        if (eig.info() != Eigen::Success)
            throw NumericError("music_2d: eigendecomposition failed, cond~" +
                               std::to_string(tr / std::max(1e-300, eig.eigenvalues().minCoeff())));
        const int s_dim = std::min(cfg_.signal_dim, dim - 1);
        const Eigen::MatrixXcd signal_basis = eig.eigenvectors().rightCols(s_dim);

        // 1 / (a^H En En^H a) evaluated as 1 / (|a|^2 - |Es^H a|^2); steering
        // entries are unit modulus so |a|^2 = dim.
        RangeAoAProfile prof;
        prof.range_axis = range_axis_;
        prof.angle_axis = angle_axis_;
        prof.period_index = beat.period_index;
        prof.speaker_index = beat.speaker_index;
        prof.values.resize(cfg_.range_bins(), cfg_.angle_bins());
        for (int r = 0; r < cfg_.range_bins(); ++r) {
            const Eigen::MatrixXcd proj = signal_basis.adjoint() * steering_[r];  // s_dim x angles
            for (int aidx = 0; aidx < cfg_.angle_bins(); ++aidx) {
                const double denom = std::max(static_cast<double>(dim) - proj.col(aidx).squaredNorm(), 1e-9);
                prof.values(r, aidx) = 1.0 / denom;
            }
        }
        const double peak = prof.values.maxCoeff();
        if (peak > 0.0) prof.values /= peak;
        return prof;
    }

  private:
    void build_grid() {
        const int mics = geom_.mic_count();
        const int dim = mics * cfg_.taps;
        const int n_beats = chirp_.period_samples() / BeatConstants::kDecim;
        const int span = (cfg_.taps - 1) * cfg_.tap_stride + 1;
        // Tap times relative to the center snapshot offset.
        const double center_off = 0.5 * (n_beats - span) * BeatConstants::kDecim / chirp_.sample_rate;
        const double B = chirp_.bandwidth();
        const double T = chirp_.period_s;
        const Eigen::Vector3d spk = chirp_.speaker_positions.at(speaker_index_);

        range_axis_.resize(cfg_.range_bins());
        for (int r = 0; r < cfg_.range_bins(); ++r) range_axis_[r] = cfg_.range_min + r * cfg_.range_step;
        angle_axis_.resize(cfg_.angle_bins());
        for (int a = 0; a < cfg_.angle_bins(); ++a) angle_axis_[a] = cfg_.angle_min + a * cfg_.angle_step;

        steering_.assign(cfg_.range_bins(), Eigen::MatrixXcd(dim, cfg_.angle_bins()));
        for (int r = 0; r < cfg_.range_bins(); ++r) {
            for (int aidx = 0; aidx < cfg_.angle_bins(); ++aidx) {
                const Eigen::Vector3d point =
                    geom_.reference() + range_axis_[r] * azimuth_unit(angle_axis_[aidx]);
                const double d_spk = (spk - point).norm();
                for (int m = 0; m < mics; ++m) {
                    const double tau =
                        (d_spk + (point - geom_.mic_positions[m]).norm()) / cfg_.speed_of_sound;
                    for (int l = 0; l < cfg_.taps; ++l) {
                        const double t_tap =
                            center_off + l * cfg_.tap_stride * BeatConstants::kDecim /
                                             static_cast<double>(chirp_.sample_rate);
                        const double f_swept = chirp_.f_min + B * t_tap / T;
                        const double phase = 2.0 * kPi * f_swept * tau - kPi * B * tau * tau / T;
                        steering_[r](l * mics + m, aidx) =
                            std::complex<double>(std::cos(phase), std::sin(phase));
                    }
                }
            }
        }
    }

    ChirpConfig chirp_;
    ArrayGeometry geom_;
    Music2dConfig cfg_;
    int speaker_index_;
    Eigen::VectorXd range_axis_;
    Eigen::VectorXd angle_axis_;
    std::vector<Eigen::MatrixXcd> steering_;  // per range: dim x angles
};

inline RangeAoAProfile music_2d(const BeatSignal& beat, const ChirpConfig& chirp,
                                const ArrayGeometry& geom, const Music2dConfig& cfg = {}) {
    RangeAoAEstimator est(chirp, geom, cfg, beat.speaker_index);
    return est.estimate(beat);
}

// One profile per chirp period per enabled speaker, ordered by start time.
inline std::vector<RangeAoAProfile> profile_sequence(const MultichannelAudio& tracking_band,
                                                     const ChirpConfig& chirp,
                                                     const ArrayGeometry& geom,
                                                     const Music2dConfig& cfg = {}) {
    chirp.validate();
    const int n_speakers = static_cast<int>(chirp.speaker_offsets_s.size());
    std::vector<RangeAoAProfile> out;
    for (int s = 0; s < n_speakers; ++s) {
        Dechirper d(chirp, s, tracking_band.channels());
        const Eigen::MatrixXcd beats = d.push(tracking_band.samples);
        RangeAoAEstimator est(chirp, geom, cfg, s);
        const int len = d.beats_per_period();
        for (int p = 0;; ++p) {
            const int start = d.period_start_beat(p);
            if (start + len > beats.cols()) break;
            BeatSignal beat;
            beat.samples = beats.middleCols(start, len);
            beat.sample_rate = d.beat_rate();
            beat.period_index = p;
            beat.speaker_index = s;
            auto prof = est.estimate(beat);
            prof.timestamp = chirp.speaker_offsets_s[s] + (p + 1) * chirp.period_s;
            out.push_back(std::move(prof));
        }
    }
    std::sort(out.begin(), out.end(), [](const RangeAoAProfile& a, const RangeAoAProfile& b) {
        return a.timestamp < b.timestamp;
    });
    return out;
}

// Peak location helper used by tests and the CLI.
struct RangeAoAPeak {
    double range_m = 0.0;
    double angle_deg = 0.0;
    double value = 0.0;
};

inline RangeAoAPeak profile_peak(const RangeAoAProfile& prof) {
    RangeAoAPeak pk;
    Eigen::Index r = 0, a = 0;
    pk.value = prof.values.maxCoeff(&r, &a);
    pk.range_m = prof.range_axis[r];
    pk.angle_deg = prof.angle_axis[a];
    return pk;
}

}  // namespace locsep
