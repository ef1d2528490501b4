#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dmlk {

// One splitmix64 step (Vigna). Used for seed expansion and stream derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Collapses up to three labels into one well-mixed 64-bit seed:
//
//   derived = h(h(h(a) ^ b) ^ c)   with h = splitmix64
//
// This is the published derivation rule for replication seeds,
// seed(cell, rep) = derive_seed(base_seed, cell_index, rep_index).
// Distinct labels produce distinct chains, so derived streams never share
// state with each other or with their parent.
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    std::uint64_t s = a;
    s = splitmix64_next(s) ^ b;
    s = splitmix64_next(s) ^ c;
    return splitmix64_next(s);
}

// Deterministic pseudo-random stream: xoshiro256++ state seeded from a single
// 64-bit seed via splitmix64, normals via Box-Muller. Two streams built from
// the same seed produce identical draw sequences within one build. A stream is
// single-owner; concurrent tasks each get their own fork().
class SeededStream {
public:
    explicit SeededStream(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64_next(sm);
    }

    std::uint64_t seed() const { return seed_; }

    // Number of raw 64-bit draws consumed so far.
    std::uint64_t position() const { return position_; }

    std::uint64_t next_u64() {
        // xoshiro256++ (Blackman & Vigna, public domain reference code)
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        ++position_;
        return result;
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer on [0, n), n >= 1. Rejection keeps it exact.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    // Standard normal via Box-Muller. Each pair of uniforms yields two
    // variates; the sine branch is cached and returned on the next call.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = 1.0 - uniform01();  // (0, 1], keeps the log finite
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 2.0 * kTwoPi * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Derived stream for a labelled sub-task (fold, learner role, tree, ...).
    // Independent of this stream's position, so forking is repeatable.
    SeededStream fork(std::uint64_t a, std::uint64_t b = 0) const {
        return SeededStream(derive_seed(seed_, a, b));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static constexpr double kTwoPi = 6.283185307179586476925286766559;

    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
    std::uint64_t position_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace dmlk
