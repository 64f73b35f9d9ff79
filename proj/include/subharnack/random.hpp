#pragma once

#include <cstdint>
#include <random>

namespace subharnack {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent per-task seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for task `index` of stream `stream` under a master seed. Depends only
/// on the three arguments, so results do not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ (stream * 0xd1b54a32d192ed03ULL)) ^ index);
}

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

// Stream tags keep the seeds of different consumers apart.
namespace stream {
inline constexpr std::uint64_t subordinator = 1;
inline constexpr std::uint64_t brownian = 2;
inline constexpr std::uint64_t outer = 3;
inline constexpr std::uint64_t inner = 4;
inline constexpr std::uint64_t coupling = 5;
inline constexpr std::uint64_t probe = 6;
}  // namespace stream

}  // namespace subharnack
