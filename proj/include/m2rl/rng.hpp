#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace m2rl {

// splitmix64; used for seeding and for deriving independent stream ids.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Portable, trivially serializable PRNG (xoshiro256**). The standard
// library engines are portable too, but their distributions are not, and
// mt19937 state is awkward to embed in binary checkpoints.
class Rng {
public:
    Rng() : Rng(0) {}

    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : state_) {
            word = splitmix64(sm);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in (0,1); never returns an exact endpoint so
    // -log(-log(u)) style transforms stay finite.
    double uniform01() {
        const uint64_t bits = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), rejection sampled (no modulo bias).
    uint64_t bounded(uint64_t n) {
        if (n <= 1)
            return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Box-Muller without a cached spare: draws two uniforms per call so the
    // stream position is independent of call parity.
    double gaussian() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::array<uint64_t, 4> save() const { return state_; }
    void restore(const std::array<uint64_t, 4>& words) { state_ = words; }

    bool operator==(const Rng&) const = default;

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
};

// Deterministic per-stream seed: hash(seed, stream). Used so per-actor and
// per-episode streams are independent of scheduling order.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0x9E3779B97F4A7C15ull + (stream << 1));
    splitmix64(s);
    return splitmix64(s);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

}  // namespace m2rl
