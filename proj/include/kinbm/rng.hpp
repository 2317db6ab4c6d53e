// Counter-based pseudo-random generator plus the variate transforms the
// samplers need. Each (seed, stream) pair is an independent deterministic
// sequence, so per-draw streams can be filled in any order, including in
// parallel, without changing the output.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace kinbm {

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1))) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform on the open interval (0, 1)
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Marsaglia-Tsang, unit rate
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::domain_error("Rng::gamma: shape must be positive");
        if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double gamma(double shape, double rate) { return gamma(shape) / rate; }

    double exponential(double mean) { return -mean * std::log(uniform()); }

    int poisson(double mean) {
        if (mean < 0.0) throw std::domain_error("Rng::poisson: negative mean");
        if (mean == 0.0) return 0;
        if (mean > 60.0) {
            // additivity keeps the product method inside exp() range
            const double half = 0.5 * mean;
            return poisson(half) + poisson(mean - half);
        }
        const double limit = std::exp(-mean);
        int count = -1;
        double prod = 1.0;
        do {
            prod *= uniform();
            ++count;
        } while (prod > limit);
        return count;
    }

    // negative binomial with pmf C(y+shape-1, y) p^shape (1-p)^y,
    // p = rate / (shape + rate) in the parametrization used by the count models
    int negative_binomial(double shape, double rate) {
        return poisson(gamma(shape, rate / shape));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

// Fixed default so bare invocations are reproducible.
inline constexpr std::uint64_t default_seed = 20110101;

} // namespace kinbm
