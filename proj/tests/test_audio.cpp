#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "locsep/stft.hpp"

using namespace locsep;
using test_helpers::interior_rms;
using test_helpers::temp_path;
using test_helpers::tone;
using Catch::Approx;

TEST_CASE("wav float32 round trip is bit exact") {
    Rng rng(11);
    MultichannelAudio a;
    a.sample_rate = 44100;
    a.samples.resize(4, 1000);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 1000; ++i) a.samples(c, i) = 0.9 * rng.normal() * 0.1;
    // float32 encoding quantizes once; store the quantized values so the
    // round trip compares float-exact data.
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 1000; ++i) a.samples(c, i) = static_cast<float>(a.samples(c, i));

    const auto path = temp_path("locsep_rt_f32.wav");
    save_wav(a, path, WavEncoding::Float32);
    const auto b = load_wav(path);
    REQUIRE(b.sample_rate == 44100);
    REQUIRE(b.channels() == 4);
    REQUIRE(b.frames() == 1000);
    REQUIRE((b.samples - a.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("wav pcm16 round trip bounded by quantization step") {
    auto a = tone(440.0, 0.05, 16000, 2, 0.7);
    const auto path = temp_path("locsep_rt_p16.wav");
    save_wav(a, path, WavEncoding::Pcm16);
    const auto b = load_wav(path);
    REQUIRE(b.frames() == a.frames());
    REQUIRE((b.samples - a.samples).cwiseAbs().maxCoeff() <= std::pow(2.0, -15.0));
}

TEST_CASE("wav handles empty audio and rejects malformed input") {
    MultichannelAudio empty;
    empty.sample_rate = 16000;
    empty.samples.resize(1, 0);
    const auto path = temp_path("locsep_empty.wav");
    save_wav(empty, path);
    const auto back = load_wav(path);
    REQUIRE(back.frames() == 0);
    REQUIRE(back.channels() == 1);

    {
        std::ofstream f(temp_path("locsep_bad.wav"), std::ios::binary | std::ios::trunc);
        f << "not a wav at all, just text padding to get past 44 bytes....";
    }
    REQUIRE_THROWS_AS(load_wav(temp_path("locsep_bad.wav")), FormatError);

    // Truncate a valid file inside the data chunk.
    auto a = tone(440.0, 0.05, 16000);
    save_wav(a, temp_path("locsep_trunc.wav"), WavEncoding::Pcm16);
    {
        std::ifstream in(temp_path("locsep_trunc.wav"), std::ios::binary);
        std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        raw.resize(raw.size() - 100);
        std::ofstream out(temp_path("locsep_trunc.wav"), std::ios::binary | std::ios::trunc);
        out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    }
    REQUIRE_THROWS_AS(load_wav(temp_path("locsep_trunc.wav")), FormatError);

    REQUIRE_THROWS_AS(load_wav(temp_path("locsep_does_not_exist.wav")), IoError);
}

TEST_CASE("band split attenuates out-of-band tones by 60 dB") {
    const Eigen::Index trim = 4096;

    auto low = tone(1000.0, 0.5, 44100);
    auto r1 = band_split(low);
    const double in_rms = interior_rms(low.samples.row(0).transpose(), trim);
    const double track_rms = interior_rms(r1.tracking_band.samples.row(0).transpose(), trim);
    REQUIRE(power_to_db(track_rms * track_rms / (in_rms * in_rms)) < -60.0);
    // and the speech band keeps it
    const double speech_rms = interior_rms(r1.speech_band.samples.row(0).transpose(), trim);
    REQUIRE(std::abs(power_to_db(speech_rms * speech_rms / (in_rms * in_rms))) < 0.2);

    auto high = tone(19000.0, 0.5, 44100);
    auto r2 = band_split(high);
    const double in2 = interior_rms(high.samples.row(0).transpose(), trim);
    const double sp2 = interior_rms(r2.speech_band.samples.row(0).transpose(), trim);
    REQUIRE(power_to_db(sp2 * sp2 / (in2 * in2)) < -60.0);
    const double tr2 = interior_rms(r2.tracking_band.samples.row(0).transpose(), trim);
    REQUIRE(std::abs(power_to_db(tr2 * tr2 / (in2 * in2))) < 0.2);
}

TEST_CASE("band split preserves length, silence and superposition") {
    MultichannelAudio silence;
    silence.sample_rate = 44100;
    silence.samples = Eigen::MatrixXd::Zero(2, 4000);
    auto r = band_split(silence);
    REQUIRE(r.speech_band.frames() == 4000);
    REQUIRE(r.tracking_band.frames() == 4000);
    REQUIRE(r.speech_band.samples.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(r.tracking_band.samples.cwiseAbs().maxCoeff() == 0.0);

    auto t1 = tone(2000.0, 0.1, 44100);
    auto t2 = tone(19000.0, 0.1, 44100);
    MultichannelAudio both = t1;
    both.samples += t2.samples;
    auto ra = band_split(t1);
    auto rb = band_split(t2);
    auto rc = band_split(both);
    REQUIRE((rc.speech_band.samples - ra.speech_band.samples - rb.speech_band.samples)
                .cwiseAbs()
                .maxCoeff() < 1e-9);
    REQUIRE((rc.tracking_band.samples - ra.tracking_band.samples - rb.tracking_band.samples)
                .cwiseAbs()
                .maxCoeff() < 1e-9);

    auto bad = tone(100.0, 0.01, 16000);
    REQUIRE_THROWS_AS(band_split(bad), ConfigError);
}

TEST_CASE("resampler produces 160k frames from 441k and preserves tones") {
    MultichannelAudio in;
    in.sample_rate = 44100;
    in.samples = Eigen::MatrixXd::Zero(1, 441000);
    auto out = resample_to_16k(in);
    REQUIRE(std::abs(out.frames() - 160000) <= 1);
    REQUIRE(out.sample_rate == 16000);

    auto t = tone(2000.0, 0.5, 44100);
    auto rt = resample_to_16k(t);
    const double a_in = interior_rms(t.samples.row(0).transpose(), 2000);
    const double a_out = interior_rms(rt.samples.row(0).transpose(), 2000 * 16 / 44);
    REQUIRE(std::abs(power_to_db(a_out * a_out / (a_in * a_in))) < 0.1);

    MultichannelAudio dc;
    dc.sample_rate = 44100;
    dc.samples = Eigen::MatrixXd::Constant(1, 22050, 0.5);
    auto rdc = resample_to_16k(dc);
    const Eigen::Index mid = rdc.frames() / 2;
    REQUIRE(rdc.samples(0, mid) == Approx(0.5).margin(1e-3));
}

TEST_CASE("stft grid matches the 16 kHz defaults") {
    StftConfig cfg;
    auto a = tone(1000.0, 0.5, 16000);
    auto spec = stft(a, cfg);
    REQUIRE(spec.freq_bins() == 257);
    REQUIRE(spec.freq_resolution == Approx(31.25));

    // magnitude peak at bin 32 (1000 / 31.25), checked against a direct DFT
    // of the windowed frame
    Eigen::Index t_mid = spec.frames() / 2;
    Eigen::Index peak = 0;
    spec.bins[0].col(t_mid).cwiseAbs().maxCoeff(&peak);
    REQUIRE(peak == 32);

    const int win = cfg.window_samples();
    const auto w = hamming_window(win);
    const Eigen::Index off = t_mid * cfg.hop_samples();
    std::complex<double> direct(0.0, 0.0);
    for (int i = 0; i < win; ++i) {
        const double ang = -2.0 * kPi * 32.0 * i / cfg.fft_size;
        direct += a.samples(0, off + i) * w[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    REQUIRE(std::abs(spec.bins[0](32, t_mid) - direct) < 1e-9 * std::abs(direct));
}

TEST_CASE("stft edge cases") {
    MultichannelAudio zero;
    zero.sample_rate = 16000;
    zero.samples = Eigen::MatrixXd::Zero(2, 3200);
    auto spec = stft(zero);
    REQUIRE(spec.bins[0].cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(spec.bins[1].cwiseAbs().maxCoeff() == 0.0);

    MultichannelAudio shorty;
    shorty.sample_rate = 16000;
    shorty.samples = Eigen::MatrixXd::Ones(1, 100);
    REQUIRE(stft(shorty).frames() == 0);

    auto a = tone(500.0, 0.2, 16000);
    auto s1 = stft(a);
    auto s2 = stft(a);
    REQUIRE((s1.bins[0] - s2.bins[0]).cwiseAbs().maxCoeff() == 0.0);  // deterministic
}

TEST_CASE("istft reconstructs interior samples to 1e-6") {
    Rng rng(99);
    MultichannelAudio a;
    a.sample_rate = 16000;
    a.samples.resize(1, 16000);
    for (int i = 0; i < 16000; ++i) a.samples(0, i) = rng.normal();
    StftConfig cfg;
    auto spec = stft(a, cfg);
    auto back = istft(spec, cfg);

    const int win = cfg.window_samples();
    const Eigen::Index lim = std::min<Eigen::Index>(back.frames(), a.frames()) - win;
    double err = 0.0, ref = 0.0;
    for (Eigen::Index i = win; i < lim; ++i) {
        err += std::pow(back.samples(0, i) - a.samples(0, i), 2);
        ref += std::pow(a.samples(0, i), 2);
    }
    REQUIRE(std::sqrt(err / ref) < 1e-6);

    SECTION("zeroed spectrogram gives silence") {
        for (auto& m : spec.bins) m.setZero();
        auto silent = istft(spec, cfg);
        REQUIRE(silent.samples.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("mismatched config is rejected") {
        StftConfig other;
        other.hop_s = 0.016;
        REQUIRE_THROWS_AS(istft(spec, other), ConfigError);
    }
}

TEST_CASE("istft of a single frame returns the windowed frame") {
    StftConfig cfg;
    MultichannelAudio a = tone(250.0, 0.032, 16000);
    REQUIRE(a.frames() == cfg.window_samples());
    auto spec = stft(a, cfg);
    REQUIRE(spec.frames() == 1);
    auto back = istft(spec, cfg);
    // normalization divides by w^2, so a single frame reconstructs w*x/w^2 = x/w;
    // here we check synthesis returns the frame samples where the window is
    // well conditioned
    for (int i = 100; i < 400; ++i)
        REQUIRE(back.samples(0, i) == Approx(a.samples(0, i)).margin(1e-9));
}

TEST_CASE("frame-level Parseval holds to 1e-9") {
    Rng rng(5);
    MultichannelAudio a;
    a.sample_rate = 16000;
    a.samples.resize(1, 512);
    for (int i = 0; i < 512; ++i) a.samples(0, i) = rng.normal();
    StftConfig cfg;
    auto spec = stft(a, cfg);
    const auto w = hamming_window(cfg.window_samples());
    double time_energy = 0.0;
    for (int i = 0; i < 512; ++i) time_energy += std::pow(a.samples(0, i) * w[i], 2);
    double freq_energy = std::norm(spec.bins[0](0, 0)) + std::norm(spec.bins[0](256, 0));
    for (int k = 1; k < 256; ++k) freq_energy += 2.0 * std::norm(spec.bins[0](k, 0));
    freq_energy /= cfg.fft_size;
    REQUIRE(std::abs(time_energy - freq_energy) < 1e-9 * time_energy);
}

TEST_CASE("log power spectrogram floor and log law") {
    StftConfig cfg;
    ComplexSpectrogram spec;
    spec.sample_rate = 16000;
    spec.fft_size = 512;
    spec.freq_resolution = 31.25;
    spec.hop = cfg.hop_s;
    spec.window_len = cfg.window_s;
    spec.bins = {Eigen::MatrixXcd::Ones(257, 4)};
    auto lps = log_power_spectrogram(spec, 0);
    REQUIRE(lps.cwiseAbs().maxCoeff() < 1e-9);

    spec.bins[0].setZero();
    lps = log_power_spectrogram(spec, 0);
    REQUIRE(lps.allFinite());
    REQUIRE(lps(0, 0) == Approx(std::log(1e-10)));

    spec.bins[0].setConstant({0.5, 0.0});
    auto lps_half = log_power_spectrogram(spec, 0);
    spec.bins[0].setConstant({1.0, 0.0});
    auto lps_full = log_power_spectrogram(spec, 0);
    REQUIRE(lps_full(3, 2) - lps_half(3, 2) == Approx(std::log(4.0)).epsilon(1e-9));

    REQUIRE_THROWS_AS(log_power_spectrogram(spec, 7), ConfigError);
}
