#pragma once

#include <cstdint>
#include <string_view>

// =============================================================================
// Deterministic random number generation.
//
// Everything downstream consumes raw 64-bit words from Xoshiro256pp and builds
// its own variates from bits, so results are reproducible across platforms and
// standard library versions. Seed derivation is a pure function of
// (master seed, replica index, subcommand tag); replicas are therefore
// independent of worker count and scheduling.
// =============================================================================

namespace favsites::rng {

struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

struct Xoshiro256pp {
    uint64_t s[4];

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    // All-zero state is unreachable: splitmix output words are never all zero.
    static Xoshiro256pp seeded(uint64_t seed) {
        SplitMix64 sm(seed);
        Xoshiro256pp g;
        for (auto& w : g.s) w = sm.next();
        return g;
    }

    uint64_t next() {
        uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // 53-bit mantissa uniform in [0, 1).
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }
};

// FNV-1a, used for tag hashing and output checksums.
inline uint64_t fnv1a(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Replica seed = mix of (master, replica index, tag). Stable by contract:
// manifests record the rule as "splitmix64(splitmix64(master ^ fnv1a(tag)) + replica)".
inline uint64_t derive_seed(uint64_t master, uint64_t replica, std::string_view tag) {
    SplitMix64 a(master ^ fnv1a(tag));
    SplitMix64 b(a.next() + replica);
    return b.next();
}

// -----------------------------------------------------------------------------
// Bit-stream variates.
//
// A Geometric(1/2) offspring count (P(X=m) = 2^-(m+1)) is the number of 1-bits
// before the next 0-bit in a fair bit stream. A sum of `zeros` such draws is
// therefore the number of 1-bits before the `zeros`-th 0-bit, which whole
// 64-bit words can serve via popcount. Each call consumes whole words only,
// so draws are deterministic given the engine state.
// -----------------------------------------------------------------------------

inline uint64_t sum_of_geometrics(Xoshiro256pp& g, uint64_t zeros) {
    if (zeros == 0) return 0;
    uint64_t ones = 0;
    for (;;) {
        uint64_t w = g.next();
        uint64_t pc = uint64_t(__builtin_popcountll(w));
        uint64_t zc = 64 - pc;
        if (zc < zeros) {
            ones += pc;
            zeros -= zc;
        } else {
            while (true) {
                if (w & 1) {
                    ++ones;
                } else {
                    if (--zeros == 0) break;
                }
                w >>= 1;
            }
            return ones;
        }
    }
}

} // namespace favsites::rng
