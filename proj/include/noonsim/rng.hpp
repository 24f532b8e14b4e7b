#pragma once

// Seed derivation and deterministic Poisson sampling. Scan points draw from
// independent engines seeded by derive_seed(base, index), so results do not
// depend on evaluation order.

#include <cstdint>
#include <random>

namespace noonsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
}

// One Poisson draw with the given mean from a fresh engine. mean <= 0 yields 0.
inline long long poisson_sample(double mean, std::uint64_t seed) {
    if (mean <= 0.0) return 0;
    std::mt19937_64 engine(seed);
    std::poisson_distribution<long long> dist(mean);
    return dist(engine);
}

}  // namespace noonsim
