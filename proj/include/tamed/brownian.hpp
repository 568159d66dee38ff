#pragma once

// Per-step Brownian increments on a dyadic mesh.
//
// For a step [t_k, t_k + h] the lattice stores
//   dW = W(t_k + h) - W(t_k)
//   dZ = int_{t_k}^{t_k+h} (W(s) - W(t_k)) ds
// per noise component. (dW, dZ) is Gaussian with covariance
// [[h, h^2/2], [h^2/2, h^3/3]]. Coarsening sums these exactly, so every level
// of a convergence study sees the same underlying path.

#include "tamed/core.hpp"
#include "tamed/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>

namespace tamed {

struct BrownianLattice {
    int m = 1;
    int level = 0;
    double t_final = 1.0;
    Matrix dW;                // m x 2^level, one column per step
    std::optional<Matrix> dZ; // same shape when present

    long steps() const { return static_cast<long>(dW.cols()); }
    double step_size() const { return t_final / static_cast<double>(steps()); }
    bool has_dz() const { return dZ.has_value(); }

    /// W(T) - W(0)
    Vector terminal() const { return dW.rowwise().sum(); }
};

inline long steps_at(int level) {
    if (level < 0 || level > 40) throw ConfigError("level must lie in [0, 40]");
    return 1L << level;
}

inline BrownianLattice sample_lattice(int m, int level, double t_final, bool with_dz, const StreamKey& stream) {
    if (m < 1) throw ConfigError("noise dimension must be >= 1");
    if (!(std::isfinite(t_final) && t_final > 0.0)) throw ConfigError("t_final must be positive");
    const long n = steps_at(level);
    const double h = t_final / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);
    const double h32 = h * sqrt_h;
    const double inv_2sqrt3 = 1.0 / (2.0 * std::sqrt(3.0));

    BrownianLattice lat;
    lat.m = m;
    lat.level = level;
    lat.t_final = t_final;
    lat.dW.resize(m, n);
    if (with_dz) lat.dZ.emplace(m, n);
    for (long k = 0; k < n; ++k) {
        for (int j = 0; j < m; ++j) {
            const auto [xi1, xi2] = normal_pair(stream, static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(j),
                                                static_cast<std::uint32_t>(level));
            lat.dW(j, k) = sqrt_h * xi1;
            if (with_dz) (*lat.dZ)(j, k) = h32 * (0.5 * xi1 + inv_2sqrt3 * xi2);
        }
    }
    return lat;
}

inline BrownianLattice coarsen(const BrownianLattice& lat, int target_level) {
    if (target_level > lat.level) throw ConfigError("coarsen: target level exceeds lattice level");
    if (target_level < 0) throw ConfigError("coarsen: negative target level");
    if (target_level == lat.level) return lat;

    const long block = 1L << (lat.level - target_level);
    const long n = steps_at(target_level);
    const double h_fine = lat.step_size();

    BrownianLattice out;
    out.m = lat.m;
    out.level = target_level;
    out.t_final = lat.t_final;
    out.dW.resize(lat.m, n);
    if (lat.dZ) out.dZ.emplace(lat.m, n);
    for (int j = 0; j < lat.m; ++j) {
        for (long k = 0; k < n; ++k) {
            double w = 0.0; // W(s_i) - W(t_k) before fine step i
            double z = 0.0;
            for (long i = k * block; i < (k + 1) * block; ++i) {
                if (lat.dZ) z += (*lat.dZ)(j, i) + w * h_fine;
                w += lat.dW(j, i);
            }
            out.dW(j, k) = w;
            if (lat.dZ) (*out.dZ)(j, k) = z;
        }
    }
    return out;
}

// Binary dump: "BLAT", uint32 m, uint32 level, float64 t_final, uint8 dz flag,
// then dW and (if flagged) dZ, each step-major (step 0 components, step 1, ...).
// Everything little-endian.

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw DomainError("lattice file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace detail

inline void save_lattice(const BrownianLattice& lat, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os.write("BLAT", 4);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(lat.m));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(lat.level));
    detail::put_le<double>(os, lat.t_final);
    detail::put_le<std::uint8_t>(os, lat.dZ ? 1 : 0);
    auto dump = [&](const Matrix& a) {
        for (long k = 0; k < a.cols(); ++k)
            for (long j = 0; j < a.rows(); ++j) detail::put_le<double>(os, a(j, k));
    };
    dump(lat.dW);
    if (lat.dZ) dump(*lat.dZ);
    if (!os) throw ConfigError("write to '" + path + "' failed");
}

inline BrownianLattice load_lattice(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + path + "'");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "BLAT", 4) != 0) throw DomainError("not a lattice file: " + path);
    BrownianLattice lat;
    lat.m = static_cast<int>(detail::get_le<std::uint32_t>(is));
    lat.level = static_cast<int>(detail::get_le<std::uint32_t>(is));
    lat.t_final = detail::get_le<double>(is);
    const bool dz = detail::get_le<std::uint8_t>(is) != 0;
    if (lat.m < 1) throw DomainError("lattice file: bad noise dimension");
    const long n = steps_at(lat.level);
    auto slurp = [&](Matrix& a) {
        a.resize(lat.m, n);
        for (long k = 0; k < n; ++k)
            for (long j = 0; j < lat.m; ++j) a(j, k) = detail::get_le<double>(is);
    };
    slurp(lat.dW);
    if (dz) slurp(lat.dZ.emplace());
    return lat;
}

} // namespace tamed
