// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "roadseg/common.hpp"

namespace roadseg {

// splitmix64 generator. Small, fast and fully specified, so every draw is
// reproducible from a 64-bit seed independent of platform library details.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo reduction; the bias is negligible for
    // the index ranges used here and keeps the draw count per call fixed.
    int64_t uniform_int(int64_t n) {
        return n <= 0 ? 0 : static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    uint64_t state() const { return state_; }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives the seed of a named child stream. Streams are keyed by a label and
// up to two counters (iteration, slot), so independent consumers never share
// or perturb each other's sequences.
inline uint64_t mix_seed(uint64_t master, std::string_view stream, uint64_t a = 0, uint64_t b = 0) {
    uint64_t h = fnv1a64(stream);
    h = fnv1a64(&master, sizeof(master), h);
    h = fnv1a64(&a, sizeof(a), h);
    h = fnv1a64(&b, sizeof(b), h);
    // one splitmix round to spread low-entropy counters
    uint64_t z = h + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng derive_rng(uint64_t master, std::string_view stream, uint64_t a = 0, uint64_t b = 0) {
    return Rng(mix_seed(master, stream, a, b));
}

}  // namespace roadseg
