#pragma once

#include <cmath>
#include <cstdint>

namespace gapflight {

/// splitmix64: used both as a stream generator and to derive independent
/// sub-seeds from one master seed. Chosen over std facilities because its
/// output is fully specified, so seeded runs reproduce across compilers.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Standard normal via Box-Muller (always consumes two draws).
    double normal() {
        double u1 = next_unit();
        double u2 = next_unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

   private:
    std::uint64_t state_;
};

/// Deterministic sub-seed derivation: one master seed fans out into named
/// streams (dataset generation, init, shuffling, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    Rng r(master ^ (0x517cc1b727220a95ULL * (stream + 1)));
    return r.next_u64();
}

}  // namespace gapflight
