#pragma once

#include <cmath>
#include <cstdint>

namespace gantruth {

// Hand-rolled generator so that streams are identical across standard
// libraries. std::mt19937 itself is portable but the distributions are not,
// and training reproducibility depends on the exact draw sequence.
//
// State advances with the splitmix64 increment; output is the finalizer.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi] inclusive
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = uint64_t(hi - lo) + 1;
        return lo + int64_t(next_u64() % span);
    }

    // Box-Muller, no spare caching so the state is the whole story
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) { state_ = s; }

    // independent stream for a named purpose, detached from this one
    Rng fork(uint64_t salt) { return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ull)); }

private:
    uint64_t state_;
};

// Stateless coordinate hash for procedural textures: same (seed, k, x, y)
// always yields the same value, independent of evaluation order.
inline uint64_t hash_coords(uint64_t seed, uint64_t k, uint64_t x, uint64_t y) {
    uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
    h = (h ^ (k + 0x9e3779b97f4a7c15ull)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (x + 0x9e3779b97f4a7c15ull)) * 0x94d049bb133111ebull;
    h = (h ^ (y + 0x9e3779b97f4a7c15ull)) * 0xbf58476d1ce4e5b9ull;
    h ^= h >> 31;
    return h;
}

// hash -> uniform in [-1, 1]
inline double hash_unit(uint64_t h) {
    return double(h >> 11) * 0x1.0p-52 - 1.0;
}

} // namespace gantruth
