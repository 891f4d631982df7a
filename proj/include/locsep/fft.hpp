#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "locsep/common.hpp"

namespace locsep {

// Iterative radix-2 Cooley-Tukey. All transform sizes in this codebase are
// powers of two (512-point STFT, padded beat spectra), so nothing fancier is
// needed. Twiddle tables are cached per size.
namespace fft_detail {

struct Plan {
    std::vector<std::complex<double>> twiddle;  // e^{-2pi i k / n}, k < n/2
    std::vector<std::uint32_t> bitrev;
};

inline std::shared_ptr<const Plan> plan_for(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::shared_ptr<const Plan>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto plan = std::make_shared<Plan>();
    plan->twiddle.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        plan->twiddle[k] = {std::cos(ang), std::sin(ang)};
    }
    plan->bitrev.resize(n);
    std::uint32_t bits = 0;
    while ((1u << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t r = 0;
        for (std::uint32_t b = 0; b < bits; ++b)
            if (i & (1u << b)) r |= 1u << (bits - 1 - b);
        plan->bitrev[i] = r;
    }
    cache[n] = plan;
    return plan;
}

}  // namespace fft_detail

// In-place complex FFT; inverse applies conjugate twiddles and 1/n scaling.
inline void fft(std::vector<std::complex<double>>& x, bool inverse = false) {
    const std::size_t n = x.size();
    if (n <= 1) return;
    if (n & (n - 1)) throw ShapeError("fft: size must be a power of two, got " + std::to_string(n));
    const auto plan = fft_detail::plan_for(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = plan->bitrev[i];
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> w = plan->twiddle[k * step];
                if (inverse) w = std::conj(w);
                const std::complex<double> u = x[i + k];
                const std::complex<double> t = w * x[i + k + half];
                x[i + k] = u + t;
                x[i + k + half] = u - t;
            }
        }
    }
    if (inverse) {
        const double s = 1.0 / static_cast<double>(n);
        for (auto& v : x) v *= s;
    }
}

// Real forward transform: n real samples -> n/2 + 1 bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& in) {
    const std::size_t n = in.size();
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = {in[i], 0.0};
    fft(buf);
    buf.resize(n / 2 + 1);
    return buf;
}

// Inverse of rfft: n/2 + 1 bins -> n real samples.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& bins, std::size_t n) {
    if (bins.size() != n / 2 + 1)
        throw ShapeError("irfft: expected " + std::to_string(n / 2 + 1) + " bins, got " +
                         std::to_string(bins.size()));
    std::vector<std::complex<double>> buf(n);
    for (std::size_t k = 0; k <= n / 2; ++k) buf[k] = bins[k];
    for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = std::conj(bins[n - k]);
    fft(buf, /*inverse=*/true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
    return out;
}

}  // namespace locsep
