// metrics.hpp — Accuracy metrics and fit diagnostics.
#pragma once

#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

// Dimension-normalized Frobenius distance: ||a - b||_F / n.
double analog_accuracy(const RealMatrix& a, const RealMatrix& b);
double analog_accuracy(const ComplexMatrix& a, const ComplexMatrix& b);

// |a - b| entry-wise.
RealMatrix entrywise_deviation(const RealMatrix& a, const RealMatrix& b);

// Residual statistics of a reconstructed model against observed data. All
// three views average the same squared residuals, so
// total^2 = mean(per_series^2) = mean(instantaneous^2).
struct FitDiagnostics {
    RealMatrix per_series_rms;    // per matrix entry, averaged over time
    RealVector instantaneous_rms; // per sample, averaged over entries
    double total_rms = 0.0;
};

// Compares the series against the prediction 1/2 M exp(-i 2pi 1e-3 t h) S.
FitDiagnostics fit_deviation(const TimeSeriesData& series, const RealMatrix& h,
                             const SpamMap& s, const SpamMap& m);

double max_diagonal_difference(const RealMatrix& a, const RealMatrix& b);
double max_offdiagonal_difference(const RealMatrix& a, const RealMatrix& b);

}  // namespace hamscope
