#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace dcys {

// Deterministic splitmix64 stream. Implemented by hand so that seeded runs are
// reproducible bit-for-bit independent of the standard library in use
// (std::normal_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller without caching the second deviate; one value per call keeps
    // the stream position a pure function of the call count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent child stream; children with distinct tags never collide with
    // the parent stream regardless of how far either has advanced.
    Rng split(std::uint64_t tag) const {
        std::uint64_t h = state_ ^ 0x2545f4914f6cdd1dULL;
        h ^= tag + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return Rng(h);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace dcys
