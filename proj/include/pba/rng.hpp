#pragma once

#include <cstdint>
#include <random>

namespace pba {

// All randomness in a run flows from one master seed. Worker scheduling must
// not change results, so streams are keyed by logical indices (replicate,
// analysis, stage), never by thread id or execution order.
//
// Key mixing uses splitmix64, which is also the recommended seeder for
// 64-bit Mersenne twisters.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(master ^ 0x5851f42d4c957f2dULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b + 0x14057b7ef767814fULL));
    s = splitmix64(s ^ (c + 0x27bb2ee687b0b0fdULL));
    return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace pba
