#pragma once

#include <cstdint>
#include <random>

namespace fdepth {

// splitmix64 step; used to mix seed material into stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derive an independent stream seed from a base seed and up to three tags.
// Replicates, bootstrap draws and noise sources each get their own stream so
// results do not depend on evaluation order or worker count.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag1,
                                 std::uint64_t tag2 = 0, std::uint64_t tag3 = 0) {
    std::uint64_t s = mix64(base);
    s = mix64(s ^ mix64(tag1 + 0x51ed270b4d7c1a11ULL));
    s = mix64(s ^ mix64(tag2 + 0x2545f4914f6cdd1dULL));
    s = mix64(s ^ mix64(tag3 + 0x9e6c63d0a1e5b4c9ULL));
    return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace fdepth
