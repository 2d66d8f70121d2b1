#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "histosr/errors.hpp"

namespace histosr {

// Deterministic random source. The raw stream is std::mt19937_64, whose output
// sequence is fixed by the C++ standard, so identical seeds give identical
// streams on every platform. All derived draws below are defined in terms of
// that stream with explicit arithmetic:
//   uniform():        next_u64() >> 11, scaled by 2^-53 into [0, 1)
//   uniform_below(n): bitmask rejection on the low bits (unbiased)
//   coin_flip():      top bit of next_u64()
//   normal():         Marsaglia polar method, spare value cached
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Decorrelated child stream: splitmix64 finalizer over (seed, stream).
    static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix64(mix64(seed) ^ stream));
    }

    std::uint64_t next_u64() { return engine_(); }

    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw ConfigError("uniform_below: n must be positive");
        if (n == 1) return 0;  // consumes no draws
        const int bits = 64 - std::countl_zero(n - 1);
        const std::uint64_t mask = (bits == 64) ? ~0ull : ((1ull << bits) - 1);
        for (;;) {
            const std::uint64_t v = next_u64() & mask;
            if (v < n) return v;
        }
    }

    // Inclusive range.
    int uniform_int(int lo, int hi) {
        if (hi < lo) throw ConfigError("uniform_int: empty range");
        return lo + static_cast<int>(uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool coin_flip() { return (next_u64() >> 63) != 0; }

    double normal(double mean, double stddev) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return mean + stddev * u * m;
    }

    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace histosr
