#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace csod {

// splitmix64; used to derive independent per-sample streams from (seed, id).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled distributions so sampled values depend only on
// this code, not on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0,1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive on both ends
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal(double mean = 0.0, double sigma = 1.0) {
        // Box-Muller, cosine branch only; deterministic and stateless.
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // normal(0, sigma) resampled until the draw lies within [-clip*sigma, clip*sigma]
    double truncated_normal(double sigma, double clip = 2.0) {
        for (;;) {
            double x = normal(0.0, sigma);
            if (std::abs(x) <= clip * sigma) return x;
        }
    }

    std::uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace csod
