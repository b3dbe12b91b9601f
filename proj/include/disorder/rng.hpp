#pragma once

#include <cstdint>
#include <random>

namespace disorder {

// All randomness flows through mt19937_64 engines seeded deterministically.
// The engine is fully specified by the standard, so identical seeds give
// identical streams on every platform. Distribution sampling is done by
// hand below because std::*_distribution output is implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent substream for run `run` under master seed `seed`.
inline std::mt19937_64 make_run_engine(std::uint64_t seed, std::uint64_t run) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(run + 1)));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

} // namespace disorder
