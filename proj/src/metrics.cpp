// metrics.cpp — Accuracy metrics and fit diagnostics.
#include "hamscope/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "hamscope/hamiltonian.hpp"
#include "hamscope/simulator.hpp"

namespace hamscope {

double analog_accuracy(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw std::invalid_argument("analog accuracy: matrices must be square and equal sized");
    }
    return (a - b).norm() / static_cast<double>(a.rows());
}

double analog_accuracy(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw std::invalid_argument("analog accuracy: matrices must be square and equal sized");
    }
    return (a - b).norm() / static_cast<double>(a.rows());
}

RealMatrix entrywise_deviation(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("entrywise deviation: shape mismatch");
    }
    return (a - b).cwiseAbs();
}

FitDiagnostics fit_deviation(const TimeSeriesData& series, const RealMatrix& h,
                             const SpamMap& s, const SpamMap& m) {
    const int n = series.dim();
    if (h.rows() != n || s.dim() != n || m.dim() != n) {
        throw std::invalid_argument("fit deviation: dimension mismatch");
    }
    const long num = series.grid.num_samples;
    const EigenDecomposition eig = eig_symmetric(h);

    FitDiagnostics diag;
    diag.per_series_rms = RealMatrix::Zero(n, n);
    diag.instantaneous_rms = RealVector::Zero(num);

    double total = 0.0;
    for (long l = 0; l < num; ++l) {
        const double t = series.grid.time(l);
        ComplexVector phases(n);
        for (int k = 0; k < n; ++k) {
            phases(k) = std::exp(-kImag * phase_of(eig.frequencies.mhz(k), t));
        }
        const ComplexMatrix prediction = 0.5 * (m.matrix * eig.basis.cast<Complex>()) *
                                         phases.asDiagonal() *
                                         (eig.basis.transpose().cast<Complex>() * s.matrix);
        const ComplexMatrix residual =
            series.snapshots[static_cast<std::size_t>(l)] - prediction;
        const RealMatrix sq = residual.cwiseAbs2();
        diag.per_series_rms += sq;
        diag.instantaneous_rms(l) = std::sqrt(sq.mean());
        total += sq.sum();
    }
    diag.per_series_rms = (diag.per_series_rms / static_cast<double>(num)).cwiseSqrt();
    diag.total_rms = std::sqrt(total / static_cast<double>(num * n * n));
    return diag;
}

double max_diagonal_difference(const RealMatrix& a, const RealMatrix& b) {
    return (a.diagonal() - b.diagonal()).cwiseAbs().maxCoeff();
}

double max_offdiagonal_difference(const RealMatrix& a, const RealMatrix& b) {
    RealMatrix diff = (a - b).cwiseAbs();
    diff.diagonal().setZero();
    return diff.maxCoeff();
}

}  // namespace hamscope
