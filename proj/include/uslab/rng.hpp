#pragma once
// PCG32 with counter-style stream derivation. Every random decision in the
// project derives a fresh generator from (seed, purpose, indices); nothing
// shares mutable generator state, which makes checkpoint resume and
// thread-count independence trivial.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace uslab {

class Pcg32 {
  public:
    Pcg32(uint64_t seed, uint64_t stream) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next();
        state_ += seed;
        next();
    }

    uint32_t next() {
        const uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const uint32_t xorshifted =
            static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        const uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // Uniform in [0, 1) with 24-bit resolution; platform independent.
    float uniform() { return static_cast<float>(next() >> 8) * 0x1.0p-24f; }

    double uniform_double() {
        const uint64_t hi = next(), lo = next();
        return static_cast<double>((hi << 21) ^ lo) * 0x1.0p-53 * 0.5 +
               static_cast<double>(hi >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) by rejection.
    uint32_t below(uint32_t n) {
        const uint32_t threshold = (-n) % n;
        for (;;) {
            const uint32_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Box-Muller (cosine branch only, fixed formula).
    float gauss() {
        float u1 = uniform();
        if (u1 < 1e-12f) u1 = 1e-12f;
        const float u2 = uniform();
        return std::sqrt(-2.0f * std::log(u1)) *
               std::cos(2.0f * std::numbers::pi_v<float> * u2);
    }

  private:
    uint64_t state_;
    uint64_t inc_;
};

// FNV-1a over the purpose string mixed with up to three indices (splitmix).
inline uint64_t mix_seed(uint64_t seed, std::string_view purpose,
                         uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
    uint64_t h = 14695981039346656037ULL;
    auto eat = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    for (char ch : purpose) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    eat(seed);
    eat(a);
    eat(b);
    eat(c);
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

inline Pcg32 make_rng(uint64_t seed, std::string_view purpose, uint64_t a = 0,
                      uint64_t b = 0, uint64_t c = 0) {
    const uint64_t m = mix_seed(seed, purpose, a, b, c);
    return Pcg32(m, m >> 32);
}

}  // namespace uslab
