#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Every variate is a pure function of (key, counter), so a Brownian increment
// can be regenerated from (seed, path, step, component) alone, independent of
// generation order or thread count.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace tamed {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    static Counter single_round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = std::uint64_t{kMulA} * c[0];
        const std::uint64_t p1 = std::uint64_t{kMulB} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Key for one Monte-Carlo sample path: (global seed, path index).
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
};

/// Two independent standard normals addressed by
/// (seed, path, step, component, level). `level` separates lattices sampled
/// directly at different resolutions for the same path.
inline std::pair<double, double> normal_pair(const StreamKey& key, std::uint64_t step, std::uint32_t component,
                                             std::uint32_t level) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                  (component & 0xFFFFu) | (level << 16), static_cast<std::uint32_t>(key.path)};
    // The upper half of the path index is folded into the key so 64-bit path
    // indices remain distinct.
    const Philox4x32::Key k{static_cast<std::uint32_t>(key.seed) ^ static_cast<std::uint32_t>(key.path >> 32) * 0x85EBCA6Bu,
                            static_cast<std::uint32_t>(key.seed >> 32)};
    const auto out = Philox4x32::apply(ctr, k);
    const std::uint64_t a = (std::uint64_t{out[0]} << 32) | out[1];
    const std::uint64_t b = (std::uint64_t{out[2]} << 32) | out[3];
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

} // namespace tamed
