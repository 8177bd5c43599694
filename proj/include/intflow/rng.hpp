#pragma once

#include <cstdint>
#include <random>

namespace intflow {

/// splitmix64 mixing step; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent child seed for stream `stream` of a parent seed.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
    return mix64(parent ^ mix64(stream));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

}  // namespace intflow
