// bootstrap.hpp — Statistical error bars via parametric bootstrap.
#pragma once

#include <cstdint>

#include "hamscope/eigensolve.hpp"
#include "hamscope/preprocess.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

struct BootstrapConfig {
    long resamples = 1000;
    double quantile = 0.99;
    long shots = 1000;  // 0 keeps exact expectation values
    std::uint64_t rng_seed = 0;
    double rank_tolerance_exact = 1e-8;
    double rank_tolerance_sampled = 1e-2;
    PreprocessConfig preprocess;
    EigenSolveConfig solve;
    unsigned max_threads = 0;  // 0 uses hardware concurrency

    // Resamples start from the estimate's own eigenbasis, so random restarts
    // default off here.
    BootstrapConfig() { solve.restarts = 0; }

    void validate() const;
};

struct StatisticalErrors {
    RealMatrix per_entry;      // entry-wise quantile of |resample - estimate|
    double per_entry_max = 0.0;
    double accuracy = 0.0;     // quantile of the dimension-normalized distance
    double frequency = 0.0;    // quantile of the worst per-mode deviation
    long resamples_used = 0;
    long failures = 0;
};

// Draws `resamples` synthetic data sets from h_hat (measurement map fixed to
// the identity, preparation map a fresh Haar unitary each time, finite-shot
// sampling), re-identifies each without regularization warm-started at
// h_hat's eigenbasis, sign-corrects against h_hat, and reports the
// configured quantile of every deviation statistic. Deterministic for a
// fixed seed regardless of thread count. Throws IdentificationError when
// more than 5% of resamples fail to identify.
StatisticalErrors bootstrap_errors(const RealMatrix& h_hat, const TimeGrid& grid,
                                   const BootstrapConfig& cfg);

}  // namespace hamscope
