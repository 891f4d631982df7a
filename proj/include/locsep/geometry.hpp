#pragma once

#include "locsep/common.hpp"

namespace locsep {

// Microphone array layout. Azimuth is measured from the array axis (+x):
// 0 deg = endfire toward increasing x, 90 deg = broadside.
struct ArrayGeometry {
    std::vector<Eigen::Vector3d> mic_positions;
    int reference_index = 0;

    static ArrayGeometry default_linear() {
        ArrayGeometry g;
        g.mic_positions = {{0.0, 0.0, 0.0}, {0.03, 0.0, 0.0}, {0.05, 0.0, 0.0}, {0.08, 0.0, 0.0}};
        return g;
    }

    int mic_count() const { return static_cast<int>(mic_positions.size()); }
    const Eigen::Vector3d& reference() const { return mic_positions[reference_index]; }

    void validate() const {
        if (mic_count() < 2) throw ConfigError("ArrayGeometry: need at least 2 microphones");
        if (reference_index < 0 || reference_index >= mic_count())
            throw ConfigError("ArrayGeometry: reference index out of range");
        for (int i = 0; i < mic_count(); ++i)
            for (int j = i + 1; j < mic_count(); ++j)
                if ((mic_positions[i] - mic_positions[j]).norm() < 1e-9)
                    throw ConfigError("ArrayGeometry: duplicate microphone positions");
    }
};

inline Eigen::Vector3d azimuth_unit(double azimuth_deg) {
    const double a = azimuth_deg * kPi / 180.0;
    return {std::cos(a), std::sin(a), 0.0};
}

// In-plane angle between the array axis (+x) and the direction to a point,
// seen from the reference microphone. Result in [0, 180] degrees.
inline double geometric_aoa_deg(const ArrayGeometry& geom, const Eigen::Vector3d& point) {
    const Eigen::Vector3d d = point - geom.reference();
    const double r = d.norm();
    if (r < 1e-12) return 90.0;
    const double c = std::clamp(d.x() / r, -1.0, 1.0);
    return std::acos(c) * 180.0 / kPi;
}

// Far-field plane-wave steering vector, normalized to the reference mic
// (a[ref] = 1). Phase advances toward the source: a_k = exp(+j 2 pi f tau_k),
// tau_k = ((p_k - p_ref) . u(theta)) / c, matching the relative phases a
// plane wave from azimuth theta imprints on the array.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double azimuth_deg,
                                        double freq_hz, double speed_of_sound = kSpeedOfSound) {
    const Eigen::Vector3d u = azimuth_unit(azimuth_deg);
    Eigen::VectorXcd a(geom.mic_count());
    for (int k = 0; k < geom.mic_count(); ++k) {
        const double tau = (geom.mic_positions[k] - geom.reference()).dot(u) / speed_of_sound;
        const double phase = 2.0 * kPi * freq_hz * tau;
        a[k] = std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return a;
}

// Exact near-field (spherical wave) response for a source at a known point,
// including the 1/d gain law, normalized to the reference mic.
inline Eigen::VectorXcd nearfield_steering(const ArrayGeometry& geom, const Eigen::Vector3d& src,
                                           double freq_hz, double speed_of_sound = kSpeedOfSound) {
    const double d_ref = (src - geom.reference()).norm();
    Eigen::VectorXcd a(geom.mic_count());
    for (int k = 0; k < geom.mic_count(); ++k) {
        const double d_k = (src - geom.mic_positions[k]).norm();
        const double phase = -2.0 * kPi * freq_hz * (d_k - d_ref) / speed_of_sound;
        const double gain = d_ref / std::max(d_k, 1e-9);
        a[k] = gain * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return a;
}

}  // namespace locsep
