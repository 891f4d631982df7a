#pragma once

#include <fstream>

#include "locsep/fmcw.hpp"
#include "locsep/music.hpp"

namespace locsep {

// Profile binary layout (little-endian):
//   bytes 0-3   magic "LSPF"
//   u32         version (1)
//   u8          axis kind: 0 = frequency (Hz), 1 = range (m)
//   u32         rows, u32 cols
//   f64[rows]   row axis
//   f64[cols]   column axis (degrees)
//   f32[rows*cols] values, row-major
namespace profile_io_detail {

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw FormatError("profile read: truncated file");
    return v;
}

inline void write_profile(const std::string& path, const Eigen::MatrixXd& values,
                          const Eigen::VectorXd& row_axis, const Eigen::VectorXd& col_axis,
                          std::uint8_t axis_kind) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("write_profile: cannot open " + path);
    f.write("LSPF", 4);
    put<std::uint32_t>(f, 1);
    put<std::uint8_t>(f, axis_kind);
    put<std::uint32_t>(f, static_cast<std::uint32_t>(values.rows()));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(values.cols()));
    for (Eigen::Index i = 0; i < row_axis.size(); ++i) put<double>(f, row_axis[i]);
    for (Eigen::Index i = 0; i < col_axis.size(); ++i) put<double>(f, col_axis[i]);
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            put<float>(f, static_cast<float>(values(r, c)));
    if (!f) throw IoError("write_profile: write failed for " + path);
}

struct RawProfile {
    Eigen::MatrixXd values;
    Eigen::VectorXd row_axis, col_axis;
    std::uint8_t axis_kind = 0;
};

inline RawProfile read_profile(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_profile: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "LSPF")
        throw FormatError("read_profile: bad magic in " + path);
    const auto version = get<std::uint32_t>(f);
    if (version != 1) throw FormatError("read_profile: unsupported version");
    RawProfile p;
    p.axis_kind = get<std::uint8_t>(f);
    const auto rows = get<std::uint32_t>(f);
    const auto cols = get<std::uint32_t>(f);
    p.row_axis.resize(rows);
    p.col_axis.resize(cols);
    for (std::uint32_t i = 0; i < rows; ++i) p.row_axis[i] = get<double>(f);
    for (std::uint32_t i = 0; i < cols; ++i) p.col_axis[i] = get<double>(f);
    p.values.resize(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) p.values(r, c) = get<float>(f);
    return p;
}

inline void write_csv(const std::string& path, const Eigen::MatrixXd& values,
                      const Eigen::VectorXd& row_axis, const Eigen::VectorXd& col_axis,
                      const std::string& row_name) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("profile csv: cannot open " + path);
    f << row_name << ",angle_deg,value\n";
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            f << row_axis[r] << ',' << col_axis[c] << ',' << values(r, c) << '\n';
}

}  // namespace profile_io_detail

inline void save_profile_binary(const MusicProfile& p, const std::string& path) {
    profile_io_detail::write_profile(path, p.values, p.freq_axis, p.angle_axis, 0);
}
inline void save_profile_binary(const RangeAoAProfile& p, const std::string& path) {
    profile_io_detail::write_profile(path, p.values, p.range_axis, p.angle_axis, 1);
}
inline void save_profile_csv(const MusicProfile& p, const std::string& path) {
    profile_io_detail::write_csv(path, p.values, p.freq_axis, p.angle_axis, "freq_hz");
}
inline void save_profile_csv(const RangeAoAProfile& p, const std::string& path) {
    profile_io_detail::write_csv(path, p.values, p.range_axis, p.angle_axis, "range_m");
}

inline MusicProfile load_music_profile(const std::string& path) {
    auto raw = profile_io_detail::read_profile(path);
    if (raw.axis_kind != 0) throw FormatError("load_music_profile: axis kind is not frequency");
    MusicProfile p;
    p.values = std::move(raw.values);
    p.freq_axis = std::move(raw.row_axis);
    p.angle_axis = std::move(raw.col_axis);
    return p;
}

inline RangeAoAProfile load_range_profile(const std::string& path) {
    auto raw = profile_io_detail::read_profile(path);
    if (raw.axis_kind != 1) throw FormatError("load_range_profile: axis kind is not range");
    RangeAoAProfile p;
    p.values = std::move(raw.values);
    p.range_axis = std::move(raw.row_axis);
    p.angle_axis = std::move(raw.col_axis);
    return p;
}

}  // namespace locsep
