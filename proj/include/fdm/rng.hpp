#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fdm {

// splitmix64 finalizer; used both to condition raw seeds and to derive
// independent per-record streams from (base seed, stream index).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4a2c62df64b8dULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(base + 0x632be59bd9b4e019ULL * (stream + 1));
}

// Deterministic generator: the uniform/normal mappings are written out by
// hand because std::uniform_real_distribution / std::normal_distribution are
// implementation-defined and would break cross-toolchain reproducibility.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller with a cached spare.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]; keeps log() finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fdm
