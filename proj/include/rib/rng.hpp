#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace rib {

// Counter-based PRNG built on the SplitMix64 mixing function. State is a
// (key, counter) pair; every draw hashes key ^ counter and bumps the counter,
// so streams are reproducible across platforms and cheap to split.
//
// Per-purpose streams are derived from a master seed by hashing a textual
// tag (FNV-1a) into the key. Different tags give statistically independent
// streams, which keeps e.g. batch shuffling identical whether or not a
// critic is consuming random bits elsewhere in the same run.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    // Derived stream for a named purpose ("selector", "encoder-init", ...).
    Rng stream(std::string_view tag) const {
        std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
        for (char ch : tag) {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ull;
        }
        return Rng(raw_key{}, mix(key_ ^ h));
    }

    Rng stream(std::string_view tag, std::uint64_t index) const {
        Rng s = stream(tag);
        s.key_ = mix(s.key_ ^ (0x2545f4914f6cdd1dull * (index + 1)));
        return s;
    }

    std::uint64_t next_u64() { return mix(key_ ^ counter_++); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool fair_bit() { return (next_u64() & 1ull) != 0; }

    // Standard normal via Box-Muller (no spare caching, for replayability).
    double next_normal() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Fisher-Yates over the given index count.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::swap(p[i - 1], p[next_below(i)]);
        }
        return p;
    }

  private:
    struct raw_key {};
    Rng(raw_key, std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace rib
