// rng.hpp — Deterministic random number generation.
//
// The engine is std::mt19937_64 (its output sequence is fixed by the
// standard); the distributions are hand rolled so that sampled streams do
// not depend on the standard library implementation.
#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace hamscope {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Stable per-task seed derivation (splitmix64 of seed xor stream).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

    // Uniform on [0, 1).
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller.
    double normal();
    // Uniform integer in [0, n), n > 0.
    int uniform_int(int n);
    // Number of successes in `trials` Bernoulli(p) draws. Exact counting up
    // to 4096 trials, rounded Gaussian approximation above that.
    long binomial(long trials, double p);
    // Standard complex normal, unit total variance.
    std::complex<double> complex_normal();

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hamscope
