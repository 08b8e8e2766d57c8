#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

// Deterministic random draws. All distributions are generated from raw
// mt19937_64 output through fixed arithmetic, so a given seed yields the
// same sequence on every platform. The mixing constants below are frozen:
// report byte-stability depends on them.

namespace smoothcop::rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// Splittable stream derivation: fold the components into one seed.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = 0x8BADF00D5EEDC0DEull;
    for (std::uint64_t v : parts) s = mix64(s + 0x9E3779B97F4A7C15ull + v);
    return s;
}

class Engine {
  public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double exponential() { return -std::log(uniform01()); }

    // Box-Muller, cosine branch only.
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Marsaglia-Tsang; shape < 1 handled via the boost Gamma(shape+1) * U^(1/shape).
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace smoothcop::rng
