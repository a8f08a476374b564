// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "simfas/types.hpp"

namespace simfas {

// Deterministic random stream addressed by (master seed, stream index).
// Gaussians come from Box-Muller on explicit 53-bit uniforms, so sequences
// are reproducible across standard libraries, not just across runs.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (stream + 1));
        std::seed_seq seq{split(z), split(z), split(z), split(z)};
        engine_.seed(seq);
    }

    // Uniform on (0, 1].
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = kTwoPi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    // Circular complex Gaussian CN(0, variance).
    Complex cgaussian(double variance) {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    CVector cgaussian_vector(Eigen::Index n, double variance) {
        CVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = cgaussian(variance);
        return v;
    }

  private:
    static std::uint32_t split(std::uint64_t& state) {
        // splitmix64, truncated to the 32-bit words seed_seq consumes
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return static_cast<std::uint32_t>((z ^ (z >> 31)) >> 32);
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace simfas
