#pragma once

// Deterministic seeding utilities. Every stochastic routine takes an explicit
// 64-bit seed; independent streams (per parameter, per trial) are derived from
// a root seed with derive_seed so that results are reproducible bit-for-bit
// regardless of execution order.

#include <cstdint>
#include <random>

namespace levylab {

// splitmix64 step; good avalanche, used only for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream split: root seed combined with (stream, trial) indices.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t trial = 0) {
    return splitmix64(splitmix64(root ^ (0xa076'1d64'78bd'642fULL * (stream + 1))) ^
                      (0xe703'7ed1'a0b4'28dbULL * (trial + 1)));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

inline double uniform01(Rng& g) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(g);
}

}  // namespace levylab
