#pragma once

#include <cstdint>
#include <random>

namespace bpc {

/// Deterministic random generator. The engine is std::mt19937_64 but every
/// distribution mapping is implemented here so that a fixed seed yields the
/// same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller, one cached spare.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 handled by boosting.
    double gamma(double shape, double scale);

    /// Chi-squared with (possibly fractional) df degrees of freedom.
    double chi_squared(double df) { return gamma(0.5 * df, 2.0); }

    /// Derive an independent child stream; used to give each worker its own
    /// generator without coupling the draw order.
    Rng fork() { return Rng(next_u64() ^ 0x9e3779b97f4a7c15ull); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bpc
