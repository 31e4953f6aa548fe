#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace droneq {

// Portable seedable generator: xoshiro256++ seeded through splitmix64.
// All distribution mappings below are fixed arithmetic on the raw 64-bit
// stream, so identical seeds reproduce identical draws on every platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log(1.0 - uniform01()) / rate; }

    // Uniform integer in [0, n) by 128-bit multiply-shift.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Derives an independent substream keyed by up to three indices.
    // Used for common-random-number layouts: the substream for a given
    // (replication, node) pair does not depend on anything else drawn.
    static Rng substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
        std::uint64_t s = master;
        std::uint64_t h = splitmix64(s);
        s = h ^ (a + 0x100000001b3ULL);
        h = splitmix64(s);
        s = h ^ (b + 0xc6a4a7935bd1e995ULL);
        h = splitmix64(s);
        s = h ^ (c + 0x2545f4914f6cdd1dULL);
        return Rng(splitmix64(s));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace droneq
