// esprit.cpp — Hankel + shift-invariance frequency estimation.
#include "hamscope/esprit.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hamscope/errors.hpp"

namespace hamscope {

void EspritConfig::validate() const {
    if (model_order < 1) {
        throw std::invalid_argument("esprit: model order must be at least 1");
    }
    if (hankel_rows < 0) {
        throw std::invalid_argument("esprit: hankel rows must be non-negative");
    }
    if (rank_tolerance <= 0.0 || rank_tolerance >= 1.0) {
        throw std::invalid_argument("esprit: rank tolerance must lie in (0, 1)");
    }
}

ComplexVector trace_signal(const TimeSeriesData& series) {
    const long num = series.grid.num_samples;
    ComplexVector trace(num);
    for (long l = 0; l < num; ++l) {
        trace(l) = series.snapshots[static_cast<std::size_t>(l)].trace();
    }
    return trace;
}

FrequencySet esprit(const ComplexVector& samples, double dt_ns, const EspritConfig& cfg) {
    cfg.validate();
    if (dt_ns <= 0.0) {
        throw std::invalid_argument("esprit: sample spacing must be positive");
    }
    const long length = samples.size();
    const int order = cfg.model_order;
    if (length < 2L * order + 1L) {
        throw std::invalid_argument("esprit: need at least 2*order+1 samples");
    }

    // The shift-invariance step needs p-1 >= order rows and the subspace
    // needs >= order columns, so p is clamped to [order+1, L-order].
    long rows = cfg.hankel_rows > 0 ? cfg.hankel_rows : length / 2;
    rows = std::clamp(rows, static_cast<long>(order) + 1L, length - order);
    const long cols = length - rows + 1;

    ComplexMatrix hankel(rows, cols);
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) {
            hankel(i, j) = samples(i + j);
        }
    }

    Eigen::BDCSVD<ComplexMatrix> svd(hankel, Eigen::ComputeThinU);
    const auto& sigma = svd.singularValues();
    if (sigma(0) <= 0.0 || sigma(order - 1) / sigma(0) < cfg.rank_tolerance) {
        throw RankDeficiencyError(
            "esprit: singular value spectrum does not support the requested model order");
    }

    const ComplexMatrix subspace = svd.matrixU().leftCols(order);
    const ComplexMatrix upper = subspace.topRows(rows - 1);
    const ComplexMatrix lower = subspace.bottomRows(rows - 1);
    const ComplexMatrix shift = upper.completeOrthogonalDecomposition().solve(lower);

    Eigen::ComplexEigenSolver<ComplexMatrix> eig(shift, false);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("esprit: eigenvalue computation failed");
    }

    RealVector freqs(order);
    for (int k = 0; k < order; ++k) {
        freqs(k) = -std::arg(eig.eigenvalues()(k)) / (kRadPerMHzNs * dt_ns);
    }
    auto result = FrequencySet::from_values(std::move(freqs));
    result.require_distinct(1e-6);
    return result;
}

RealVector match_frequencies(const FrequencySet& a, const FrequencySet& b) {
    if (a.mhz.size() != b.mhz.size()) {
        throw std::invalid_argument("frequency sets have different sizes");
    }
    return (a.mhz - b.mhz).cwiseAbs();
}

double max_frequency_error(const FrequencySet& a, const FrequencySet& b) {
    return match_frequencies(a, b).maxCoeff();
}

}  // namespace hamscope
