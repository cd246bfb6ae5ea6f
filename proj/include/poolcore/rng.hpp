#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace poolcore {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stable seed for a sub-stream identified by integer coordinates.
/// Depends only on the values, never on call order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept {
    std::uint64_t h = mix64(master);
    for (std::uint64_t c : coords) {
        h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    }
    return h;
}

/// Uniform draw on the open interval (0, 1) with 53 random bits.
inline double uniform_open01(Rng& rng) noexcept {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace poolcore
