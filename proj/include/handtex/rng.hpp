#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace handtex {

/// Derives a decorrelated seed from a base seed and a stream salt.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t s = base ^ 0x6C62272E07BB0142ull;
    s ^= (salt + 1) * 0x9E3779B97F4A7C15ull;
    s *= 0xFF51AFD7ED558CCDull;
    s ^= s >> 33;
    return s + 0x2545F4914F6CDD1Dull;
}

// Deterministic RNG with hand-rolled distributions so that sequences do not
// depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = eng_();
        while (x >= lim) x = eng_();
        return x % n;
    }

    /// Derives an independent stream, e.g. one per scene id.
    Rng fork(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

    template <class T>
    std::vector<T> normal_vec(std::size_t n, double sigma) {
        std::vector<T> v(n);
        for (auto& x : v) x = T(normal() * sigma);
        return v;
    }

private:
    std::mt19937_64 eng_;
    std::uint64_t seed_ = 0;
    double spare_ = 0;
    bool have_spare_ = false;
};

/// Draws k distinct indices out of [0, n) in sorted order (reservoir-free,
/// partial Fisher-Yates over an index vector).
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n,
                                                           std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + std::size_t(rng.index(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace handtex
