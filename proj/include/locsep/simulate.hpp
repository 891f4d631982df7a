#pragma once

#include "locsep/fmcw.hpp"
#include "locsep/geometry.hpp"
#include "locsep/stft.hpp"

namespace locsep {

// Shoebox room for the image-source method. Order 0 means free space.
struct RoomSpec {
    Eigen::Vector3d dimensions{6.0, 5.0, 3.0};
    double reflection_coefficient = 0.5;
    int max_image_order = 0;
    double speed_of_sound = kSpeedOfSound;

    void validate() const {
        if (dimensions.minCoeff() <= 0.0) throw ConfigError("RoomSpec: dimensions must be positive");
        if (reflection_coefficient < 0.0 || reflection_coefficient >= 1.0)
            throw ConfigError("RoomSpec: reflection coefficient must lie in [0, 1)");
        if (max_image_order < 0) throw ConfigError("RoomSpec: image order must be >= 0");
    }
    bool contains(const Eigen::Vector3d& p) const {
        return (p.array() >= 0.0).all() && (p.array() <= dimensions.array()).all();
    }
};

// Piecewise-linear motion path.
struct SourceTrajectory {
    std::vector<std::pair<double, Eigen::Vector3d>> waypoints;  // (time s, position m)

    static SourceTrajectory stationary(const Eigen::Vector3d& p) {
        return SourceTrajectory{{{0.0, p}}};
    }

    void validate() const {
        if (waypoints.empty()) throw ConfigError("SourceTrajectory: no waypoints");
        for (std::size_t i = 1; i < waypoints.size(); ++i)
            if (waypoints[i].first <= waypoints[i - 1].first)
                throw ConfigError("SourceTrajectory: waypoint times must be strictly increasing");
    }
    bool is_static() const {
        for (std::size_t i = 1; i < waypoints.size(); ++i)
            if ((waypoints[i].second - waypoints[0].second).norm() > 1e-12) return false;
        return true;
    }
    Eigen::Vector3d position_at(double t) const {
        if (waypoints.size() == 1 || t <= waypoints.front().first) return waypoints.front().second;
        if (t >= waypoints.back().first) return waypoints.back().second;
        for (std::size_t i = 1; i < waypoints.size(); ++i) {
            if (t <= waypoints[i].first) {
                const double t0 = waypoints[i - 1].first, t1 = waypoints[i].first;
                const double a = (t - t0) / (t1 - t0);
                return (1.0 - a) * waypoints[i - 1].second + a * waypoints[i].second;
            }
        }
        return waypoints.back().second;
    }
};

struct GroundTruth {
    std::vector<double> track_times;       // seconds, fixed cadence
    std::vector<double> aoa_track;         // degrees, target source
    std::vector<double> distance_track;    // meters from the reference mic
    std::vector<MultichannelAudio> component_signals;  // per source, at the array
    MultichannelAudio noise_component;     // scaled noise actually added
    double interference_scale = 1.0;       // gain applied to interference+noise
    double target_snr_db = 0.0;
};

struct SceneSource {
    Eigen::VectorXd dry;  // mono dry signal at the render rate
    SourceTrajectory trajectory;
};

// ---------------------------------------------------------------------------
// Image-source room impulse response. Taps are windowed-sinc fractional
// delays at d_i/c with gain reflection^order / d_i.

namespace sim_detail {

inline constexpr int kSincHalf = 24;

inline void add_fractional_tap(std::vector<double>& rir, double delay_samples, double gain) {
    const int center = static_cast<int>(std::floor(delay_samples));
    for (int k = -kSincHalf; k <= kSincHalf + 1; ++k) {
        const int idx = center + k;
        if (idx < 0 || idx >= static_cast<int>(rir.size())) continue;
        const double x = static_cast<double>(idx) - delay_samples;
        const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
        const double w = 0.5 * (1.0 + std::cos(kPi * x / (kSincHalf + 1)));  // Hann taper
        rir[idx] += gain * sinc * w;
    }
}

struct ImagePoint {
    Eigen::Vector3d pos;
    int order;
};

inline std::vector<ImagePoint> image_sources(const RoomSpec& room, const Eigen::Vector3d& src) {
    std::vector<ImagePoint> imgs;
    const int order = room.max_image_order;
    const int m_span = order / 2 + 1;
    for (int mx = -m_span; mx <= m_span; ++mx)
        for (int px = 0; px < 2; ++px) {
            const int cx = px == 0 ? std::abs(2 * mx) : std::abs(2 * mx - 1);
            if (cx > order) continue;
            const double x = px == 0 ? 2.0 * mx * room.dimensions.x() + src.x()
                                     : 2.0 * mx * room.dimensions.x() - src.x();
            for (int my = -m_span; my <= m_span; ++my)
                for (int py = 0; py < 2; ++py) {
                    const int cy = py == 0 ? std::abs(2 * my) : std::abs(2 * my - 1);
                    if (cx + cy > order) continue;
                    const double y = py == 0 ? 2.0 * my * room.dimensions.y() + src.y()
                                             : 2.0 * my * room.dimensions.y() - src.y();
                    for (int mz = -m_span; mz <= m_span; ++mz)
                        for (int pz = 0; pz < 2; ++pz) {
                            const int cz = pz == 0 ? std::abs(2 * mz) : std::abs(2 * mz - 1);
                            if (cx + cy + cz > order) continue;
                            const double z = pz == 0 ? 2.0 * mz * room.dimensions.z() + src.z()
                                                     : 2.0 * mz * room.dimensions.z() - src.z();
                            imgs.push_back({{x, y, z}, cx + cy + cz});
                        }
                }
        }
    return imgs;
}

}  // namespace sim_detail

inline std::vector<double> simulate_rir(const RoomSpec& room, const Eigen::Vector3d& source_pos,
                                        const Eigen::Vector3d& mic_pos, int sample_rate = 44100) {
    room.validate();
    if (!room.contains(source_pos))
        throw ConfigError("simulate_rir: source outside room");
    const auto imgs = sim_detail::image_sources(room, source_pos);
    double max_delay = 0.0;
    for (const auto& im : imgs)
        max_delay = std::max(max_delay, (im.pos - mic_pos).norm() / room.speed_of_sound);
    const int len = static_cast<int>(std::ceil(max_delay * sample_rate)) + 2 * sim_detail::kSincHalf + 4;
    std::vector<double> rir(len, 0.0);
    for (const auto& im : imgs) {
        const double dist = std::max((im.pos - mic_pos).norm(), 1e-6);
        const double gain = std::pow(room.reflection_coefficient, im.order) / dist;
        sim_detail::add_fractional_tap(rir, dist / room.speed_of_sound * sample_rate, gain);
    }
    return rir;
}

namespace sim_detail {

// Linear convolution via zero-padded FFT, output trimmed to n samples.
inline Eigen::VectorXd fft_convolve(const Eigen::VectorXd& x, const std::vector<double>& h,
                                    Eigen::Index n_out) {
    std::size_t n = 1;
    while (n < x.size() + h.size()) n <<= 1;
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) a[i] = x[i];
    for (std::size_t i = 0; i < h.size(); ++i) b[i] = h[i];
    auto fa = rfft(a);
    const auto fb = rfft(b);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    const auto y = irfft(fa, n);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_out);
    for (Eigen::Index i = 0; i < n_out && i < static_cast<Eigen::Index>(y.size()); ++i) out[i] = y[i];
    return out;
}

}  // namespace sim_detail

// Rendering block length: matches the chirp period so Doppler stays bounded.
inline constexpr double kRenderBlockS = 0.040;

// Renders moving sources through block-frozen RIRs with linear cross-fades.
// The first source is the target whose AoA/distance tracks are reported.
inline std::pair<MultichannelAudio, GroundTruth> render_scene(
    const std::vector<SceneSource>& sources, const RoomSpec& room, const ArrayGeometry& geom,
    int sample_rate = 44100, double track_cadence_s = 0.010) {
    room.validate();
    geom.validate();
    if (sources.empty()) throw ConfigError("render_scene: no sources");
    Eigen::Index n = 0;
    for (const auto& s : sources) n = std::max(n, s.dry.size());

    GroundTruth truth;
    MultichannelAudio mixture;
    mixture.sample_rate = sample_rate;
    mixture.samples = Eigen::MatrixXd::Zero(geom.mic_count(), n);

    const int block = static_cast<int>(std::lround(kRenderBlockS * sample_rate));
    for (const auto& src : sources) {
        src.trajectory.validate();
        MultichannelAudio comp;
        comp.sample_rate = sample_rate;
        comp.samples = Eigen::MatrixXd::Zero(geom.mic_count(), n);

        if (src.trajectory.is_static()) {
            const Eigen::Vector3d pos = src.trajectory.position_at(0.0);
            if (!room.contains(pos)) throw ConfigError("render_scene: source outside room");
            for (int m = 0; m < geom.mic_count(); ++m) {
                const auto rir = simulate_rir(room, pos, geom.mic_positions[m], sample_rate);
                comp.samples.row(m) = sim_detail::fft_convolve(src.dry, rir, n).transpose();
            }
        } else {
            // Triangular cross-fade: block b's frozen render covers
            // [b*block, (b+2)*block) with weight rising then falling; the
            // weights of consecutive blocks sum to 1 in the interior.
            const int n_blocks = static_cast<int>((n + block - 1) / block);
            Eigen::VectorXd wsum = Eigen::VectorXd::Zero(n);
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(geom.mic_count(), n);
            for (int b = -1; b < n_blocks; ++b) {
                const double t_center = (static_cast<double>(b) + 1.0) * block / sample_rate;
                const Eigen::Vector3d pos = src.trajectory.position_at(t_center);
                if (!room.contains(pos)) throw ConfigError("render_scene: trajectory exits room");
                const Eigen::Index lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(b) * block);
                const Eigen::Index hi = std::min<Eigen::Index>(n, (static_cast<Eigen::Index>(b) + 2) * block);
                if (lo >= hi) continue;
                for (int m = 0; m < geom.mic_count(); ++m) {
                    const auto rir = simulate_rir(room, pos, geom.mic_positions[m], sample_rate);
                    // Input history covering the RIR tail for this block.
                    const Eigen::Index start_in =
                        std::max<Eigen::Index>(0, lo - static_cast<Eigen::Index>(rir.size()) + 1);
                    const Eigen::Index in_len =
                        std::min<Eigen::Index>(hi, src.dry.size()) - start_in;
                    if (in_len <= 0) continue;
                    const Eigen::VectorXd y = sim_detail::fft_convolve(
                        src.dry.segment(start_in, in_len), rir, hi - start_in);
                    for (Eigen::Index i = lo; i < hi; ++i) {
                        const double center = (static_cast<double>(b) + 1.0) * block;
                        const double w = std::max(0.0, 1.0 - std::abs(static_cast<double>(i) - center) / block);
                        acc(m, i) += w * y[i - start_in];
                        if (m == 0) wsum[i] += w;
                    }
                }
            }
            for (Eigen::Index i = 0; i < n; ++i)
                comp.samples.col(i) = acc.col(i) / std::max(wsum[i], 1e-12);
        }
        mixture.samples += comp.samples;
        truth.component_signals.push_back(std::move(comp));
    }

    const auto& target = sources.front().trajectory;
    for (double t = 0.0; t * sample_rate < static_cast<double>(n); t += track_cadence_s) {
        const Eigen::Vector3d p = target.position_at(t);
        truth.track_times.push_back(t);
        truth.aoa_track.push_back(geometric_aoa_deg(geom, p));
        truth.distance_track.push_back((p - geom.reference()).norm());
    }
    return {std::move(mixture), std::move(truth)};
}

// Scales interference + noise so the target-to-rest power ratio on the
// reference channel hits the requested SNR. Returns the applied scale.
struct MixResult {
    MultichannelAudio mixture;
    double other_scale = 1.0;
};

inline MixResult mix_at_snr(const MultichannelAudio& target,
                            const std::vector<MultichannelAudio>& interferers,
                            const MultichannelAudio& noise, double target_snr_db,
                            int reference_channel = 0) {
    const Eigen::Index n = target.frames();
    const int ch = target.channels();
    Eigen::MatrixXd other = Eigen::MatrixXd::Zero(ch, n);
    for (const auto& it : interferers) {
        if (it.channels() != ch || it.frames() != n)
            throw ShapeError("mix_at_snr: interferer shape mismatch");
        other += it.samples;
    }
    if (noise.frames() > 0) {
        if (noise.channels() != ch || noise.frames() != n)
            throw ShapeError("mix_at_snr: noise shape mismatch");
        other += noise.samples;
    }
    const double p_target = target.samples.row(reference_channel).squaredNorm();
    if (p_target <= 0.0) throw NumericError("mix_at_snr: silent target, SNR undefined");
    const double p_other = other.row(reference_channel).squaredNorm();
    double scale = 1.0;
    if (p_other > 0.0)
        scale = std::sqrt(p_target / (p_other * db_to_power(target_snr_db)));
    MixResult r;
    r.other_scale = scale;
    r.mixture.sample_rate = target.sample_rate;
    r.mixture.samples = target.samples + scale * other;
    return r;
}

// ---------------------------------------------------------------------------
// FMCW reflections off a (possibly moving) body. Each speaker/mic/path tuple
// receives the analytic chirp delayed by the exact speaker->point->mic path;
// secondary paths model extra body reflections with configurable offsets.

struct BodyPath {
    double extra_path_m = 0.0;  // added to the round-trip path length
    double gain_scale = 1.0;    // relative to the main reflection
};

inline MultichannelAudio simulate_fmcw_scene(const ChirpConfig& chirp,
                                             const SourceTrajectory& reflector,
                                             const ArrayGeometry& geom,
                                             const std::vector<BodyPath>& body_extra_paths = {},
                                             double duration_s = 1.0,
                                             double reflect_gain = 0.05) {
    chirp.validate();
    geom.validate();
    reflector.validate();
    const int fs = chirp.sample_rate;
    const Eigen::Index n = static_cast<Eigen::Index>(std::lround(duration_s * fs));
    MultichannelAudio out;
    out.sample_rate = fs;
    out.samples = Eigen::MatrixXd::Zero(geom.mic_count(), n);

    std::vector<BodyPath> paths = {{0.0, 1.0}};
    paths.insert(paths.end(), body_extra_paths.begin(), body_extra_paths.end());

    const int n_speakers = static_cast<int>(chirp.speaker_offsets_s.size());
    for (int s = 0; s < n_speakers; ++s) {
        const Eigen::Vector3d spk = chirp.speaker_positions[s];
        const double offset = chirp.speaker_offsets_s[s];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / fs;
            const Eigen::Vector3d p = reflector.position_at(t);
            const double d_spk = (spk - p).norm();
            for (int m = 0; m < geom.mic_count(); ++m) {
                const double d_mic = (p - geom.mic_positions[m]).norm();
                double acc = 0.0;
                for (const auto& path : paths) {
                    const double delay = (d_spk + d_mic + path.extra_path_m) / kSpeedOfSound;
                    const double emit_t = t - delay - offset;
                    if (emit_t < 0.0) continue;
                    const double gain =
                        reflect_gain * path.gain_scale / std::max(d_spk * d_mic, 1e-6);
                    acc += gain * chirp.chirp_value(emit_t);
                }
                out.samples(m, i) += acc;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic signal generators for datasets and tests.

inline MultichannelAudio white_noise(int channels, Eigen::Index frames, int sample_rate, Rng& rng,
                                     double rms = 1.0) {
    MultichannelAudio out;
    out.sample_rate = sample_rate;
    out.samples.resize(channels, frames);
    for (int c = 0; c < channels; ++c)
        for (Eigen::Index i = 0; i < frames; ++i) out.samples(c, i) = rms * rng.normal();
    return out;
}

// Seeded vowel-stream synthesizer: pulse train through talker-specific
// formant resonators with syllabic envelopes and pauses. Gives speech-like
// TF sparsity without shipping a corpus; talker_id fixes pitch and formant
// ranges so datasets can split train/test by identity.
inline Eigen::VectorXd synth_speech(int talker_id, double duration_s, int sample_rate, Rng& rng) {
    const Eigen::Index n = static_cast<Eigen::Index>(std::lround(duration_s * sample_rate));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);

    Rng talker_rng(0xabcdef1234ULL + 7919ULL * static_cast<std::uint64_t>(talker_id));
    const double f0_base = talker_rng.uniform(95.0, 235.0);
    std::array<double, 4> formant_base{};
    const double centers[4] = {550.0, 1250.0, 2500.0, 3400.0};
    for (int k = 0; k < 4; ++k) formant_base[k] = centers[k] * talker_rng.uniform(0.85, 1.2);

    // Resonator states (two-pole biquads).
    struct Res { double y1 = 0.0, y2 = 0.0; double b0 = 0.0, a1 = 0.0, a2 = 0.0; };
    std::array<Res, 4> res;
    auto tune = [&](int k, double freq, double bw) {
        const double r = std::exp(-kPi * bw / sample_rate);
        res[k].a1 = -2.0 * r * std::cos(2.0 * kPi * freq / sample_rate);
        res[k].a2 = r * r;
        res[k].b0 = 1.0 - r;
    };

    Eigen::Index i = 0;
    double phase = 0.0;
    while (i < n) {
        const bool voiced = rng.uniform() < 0.78;
        const double seg_dur = voiced ? rng.uniform(0.10, 0.32) : rng.uniform(0.03, 0.16);
        const Eigen::Index seg = std::min<Eigen::Index>(
            n - i, static_cast<Eigen::Index>(std::lround(seg_dur * sample_rate)));
        if (voiced) {
            const double f0 = f0_base * rng.uniform(0.88, 1.15);
            const double f0_slope = rng.uniform(-0.12, 0.12);
            for (int k = 0; k < 4; ++k)
                tune(k, formant_base[k] * rng.uniform(0.82, 1.22), rng.uniform(60.0, 180.0) * (k + 1));
            for (Eigen::Index j = 0; j < seg; ++j) {
                const double frac = static_cast<double>(j) / std::max<Eigen::Index>(seg, 1);
                phase += (f0 * (1.0 + f0_slope * frac)) / sample_rate;
                double excite = 0.0;
                if (phase >= 1.0) { phase -= 1.0; excite = 1.0; }
                excite += 0.02 * rng.normal();  // breathiness
                double sample = 0.0;
                for (auto& rz : res) {
                    const double y = rz.b0 * excite - rz.a1 * rz.y1 - rz.a2 * rz.y2;
                    rz.y2 = rz.y1;
                    rz.y1 = y;
                    sample += y;
                }
                const double env = std::sin(kPi * std::min(1.0, frac * 1.25)) * 0.9 + 0.1;
                out[i + j] = sample * env;
            }
        } else if (rng.uniform() < 0.35) {
            // occasional fricative burst
            double hp1 = 0.0;
            for (Eigen::Index j = 0; j < seg; ++j) {
                const double w = rng.normal();
                const double y = w - hp1;
                hp1 = w;
                out[i + j] = 0.12 * y * std::sin(kPi * j / std::max<Eigen::Index>(seg, 1));
            }
        }
        i += seg;
    }
    const double rms = std::sqrt(out.squaredNorm() / static_cast<double>(n));
    if (rms > 1e-9) out *= 0.1 / rms;
    return out;
}

}  // namespace locsep
