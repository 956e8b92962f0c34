#pragma once

#include <cstdint>
#include <random>

namespace fracinv {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate user seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for replication `index` of a run seeded with `seed`. Depends only on
/// (seed, index), so replications can run in any order on any thread.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng{mix64(seed)}; }

}  // namespace fracinv
