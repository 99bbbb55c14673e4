#ifndef CWC_RNG_HPP
#define CWC_RNG_HPP

#include <cstdint>

namespace cwc {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xoshiro256** 1.0 (Blackman & Vigna, public domain), seeded through
/// splitmix64 so any 64-bit seed yields a well-mixed state.
class Xoshiro256 {
public:
    explicit Xoshiro256(uint64_t seed) {
        uint64_t sm = seed;
        for (uint64_t& word : s_) word = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1): strictly positive, strictly below one. Suitable
    /// for -log(u) waiting times (never 0, never infinite).
    double next_open_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    static constexpr const char* identity() { return "xoshiro256** 1.0 / splitmix64 seeding"; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

/// Deterministic per-replica seed: mixes the replica index into the base
/// seed through the splitmix64 output function (a bijection), so distinct
/// indices give distinct seeds.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    uint64_t state = base + (index + 1) * 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace cwc

#endif
