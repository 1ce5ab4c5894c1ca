// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-contained deterministic RNG. Everything downstream of a seed must be
// bit-reproducible across platforms, so we do not use std::uniform_*
// distributions (their outputs are implementation-defined).

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace instructmt {

// Derives an independent stream seed from (root seed, stream name, record id).
// FNV-1a over the name, then splitmix64-style finalization.
inline uint64_t mix_seed(uint64_t seed, std::string_view stream, uint64_t id = 0) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= id * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull;
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = -n % n;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Inclusive integer range.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller with a cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = 1.0 - next_double();  // avoid log(0)
        const double v = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u));
        const double angle = 6.283185307179586476925286766559 * v;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace instructmt
