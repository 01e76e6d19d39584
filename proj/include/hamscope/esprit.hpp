// esprit.hpp — Super-resolution frequency extraction from the trace signal.
#pragma once

#include "hamscope/hamiltonian.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

struct EspritConfig {
    int model_order = 0;           // number of frequencies to recover
    int hankel_rows = 0;           // 0 selects floor(L/2), then clamps to a valid range
    double rank_tolerance = 1e-8;  // relative singular value floor for the signal subspace

    void validate() const;
};

// Diagonal sum of each snapshot: F[l] = sum_m y_mm[l].
ComplexVector trace_signal(const TimeSeriesData& series);

// Rotational-invariance frequency estimation. Builds a Hankel matrix from
// the samples, extracts the dominant left singular subspace, and solves the
// shift-invariance relation for the signal poles. Frequencies are returned
// in MHz, sorted ascending, without projecting poles onto the unit circle.
//
// Throws RankDeficiencyError when the samples do not support `model_order`
// modes at the configured tolerance, and DegeneracyError when two
// recovered frequencies coincide within 1e-6 MHz.
FrequencySet esprit(const ComplexVector& samples, double dt_ns, const EspritConfig& cfg);

// Per-pair deviations |a_k - b_k| between two ascending frequency sets.
// Pairing sorted values in order minimizes the total absolute deviation
// for points on a line.
RealVector match_frequencies(const FrequencySet& a, const FrequencySet& b);

// Largest absolute difference between two ascending frequency sets.
double max_frequency_error(const FrequencySet& a, const FrequencySet& b);

}  // namespace hamscope
