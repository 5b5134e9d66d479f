#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

// Deterministic random machinery. Everything here is fixed-algorithm and
// platform-independent: identical seeds produce identical streams on any
// build, which the reproducibility contracts depend on. The standard
// <random> distributions are implementation-defined and deliberately
// avoided.

namespace rankfuse {

// ---------------------------------------------------------------------------
// splitmix64 — 64-bit finalizer/mixer (Steele, Lea, Flood 2014)
// ---------------------------------------------------------------------------
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combine a seed with one more word; fold repeatedly for tuples.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t word) noexcept {
    return splitmix64(seed ^ (splitmix64(word) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return mix_seed(mix_seed(seed, a), b);
}

// FNV-1a over the bytes of an identifier; the canonical string hash used to
// give each state its own subsampling stream.
inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Xoshiro256++ (Blackman & Vigna 2019), seeded via splitmix64 expansion
// ---------------------------------------------------------------------------
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) noexcept {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x = splitmix64(x);
            word = x;
        }
    }

    std::uint64_t next() noexcept {
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

    // Unbiased uniform integer in [0, n), n >= 1. Lemire's multiply-shift
    // with rejection.
    std::uint64_t bounded(std::uint64_t n) noexcept {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0ULL - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform01() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform double in (0, 1]; safe as a log argument.
    double uniform01_open() noexcept {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Uncached: fixed cost of two uniforms
    // per variate keeps the stream position independent of call history.
    double normal() noexcept {
        const double u = uniform01_open();
        const double v = uniform01();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace rankfuse
