// simulator.hpp — Exact dynamics and finite-shot sampling.
#pragma once

#include <cstdint>

#include "hamscope/hamiltonian.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

struct NoiseConfig {
    long shots = 1000;                  // readouts per quadrature per sample
    double damping_rate_per_ns = 0.0;   // envelope e^{-rate * t} before sampling
    std::uint64_t seed = 0;
    bool clip_out_of_range = false;     // clip damped values into [-1/2, 1/2]
};

// Exact expectation values y[l] = (1/2) M exp(-i 2*pi*1e-3 t_l h) S.
TimeSeriesData simulate_exact(const RealMatrix& h, const SpamMap& s, const SpamMap& m,
                              const TimeGrid& grid);
TimeSeriesData simulate_exact(const HamiltonianParams& h, const SpamMap& s, const SpamMap& m,
                              const TimeGrid& grid);

// Replaces every quadrature with the mean of `shots` +-1/2 readouts whose
// success probability is 1/2 plus the (optionally damped) exact value.
// Deterministic for a fixed seed. Values pushed outside [-1/2, 1/2] by
// damping are clipped when requested and rejected otherwise.
TimeSeriesData sample_shots(const TimeSeriesData& exact, const NoiseConfig& noise);

// Haar-distributed unitary (complex Ginibre followed by phase-fixed QR).
SpamMap haar_random_unitary(int n, std::uint64_t seed);

// Haar-distributed real orthogonal matrix.
RealMatrix haar_random_orthogonal(int n, std::uint64_t seed);

}  // namespace hamscope
