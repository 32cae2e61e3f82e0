#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace risnf {

/// Counter-based generator: draw i of a stream is a pure function of (key, i),
/// so streams do not depend on scheduling. Mixing is SplitMix64's finalizer.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(mix(key)) {}

    /// Stream keyed by an ordered tuple of integers, e.g. (seed, realization, purpose).
    static CounterRng keyed(std::initializer_list<std::uint64_t> parts) {
        std::uint64_t k = 0x6a09e667f3bcc909ULL;
        for (auto p : parts) k = mix(k ^ mix(p + 0x9e3779b97f4a7c15ULL));
        return CounterRng(k);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one draw per call; no cached pair).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    std::uint64_t counter() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace risnf
