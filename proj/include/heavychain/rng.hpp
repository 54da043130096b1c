#pragma once

#include <cstdint>
#include <random>

namespace heavychain {

// splitmix64 finalizer (Steele/Lea/Flood). Used everywhere a derived seed is
// needed so that results are independent of execution order and thread count.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for stream `a` of a master seed (trial index, row index, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a) {
    return mix64(master ^ mix64(a + 0x632be59bd9b4e019ULL));
}

// Two-level stream (cell index, trial index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(master, a), b);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

} // namespace heavychain
