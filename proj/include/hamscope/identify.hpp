// identify.hpp — End-to-end Hamiltonian identification from time-series data.
#pragma once

#include <vector>

#include "hamscope/eigensolve.hpp"
#include "hamscope/esprit.hpp"
#include "hamscope/hamiltonian.hpp"
#include "hamscope/metrics.hpp"
#include "hamscope/preprocess.hpp"
#include "hamscope/spam_estimation.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

struct IdentifyConfig {
    PreprocessConfig preprocess;
    EigenSolveConfig solve;
    int esprit_rows = 0;                   // 0 selects floor(L/2)
    double rank_tolerance_exact = 1e-8;    // subspace floor on exact data
    double rank_tolerance_sampled = 1e-2;  // subspace floor on finite-shot data
    bool regularize = true;                // ramp the support-leakage penalty
    bool seed_from_target = true;          // warm start from the target eigenbasis

    void validate() const;
};

// Everything the pipeline learned from one data set. The raw estimate lives
// in the frame picked by the optimizer (a measurement-side rotation away
// from the generating frame); the sign-corrected pair is aligned with the
// target up to that rotation's non-diagonal part.
struct IdentificationResult {
    FrequencySet frequencies;
    RealVector frequency_deviation;  // |estimated - target| per sorted mode
    RealMatrix basis;                // identified orthogonal eigenbasis
    RealMatrix h_raw;                // basis diag(frequencies) basis^T
    SpamMap initial_map_raw;         // preparation map in the identified frame
    RealVector signs;                // measurement sign pattern, first entry +1
    RealMatrix h;                    // diag(signs) h_raw diag(signs)
    SpamMap initial_map;             // diag(signs) * initial_map_raw
    double analog_error = 0.0;       // ||h - target||_F / n
    double data_fit = 0.0;
    double leakage = 0.0;            // off-support Frobenius norm of h_raw
    double mu_used = 0.0;
    bool converged = false;
    std::vector<MuStage> stages;
    FitDiagnostics diagnostics;      // residuals in the identified frame
};

// Runs frequency extraction, ramp removal, eigenbasis optimization, map
// estimation, and sign post-correction against the target. Throws
// RankDeficiencyError / DegeneracyError / IdentificationError when the data
// cannot support the model; a returned result with converged == false means
// no optimizer start met the gradient tolerance.
IdentificationResult identify(const TimeSeriesData& series, const HamiltonianParams& target,
                              const IdentifyConfig& cfg);

}  // namespace hamscope
