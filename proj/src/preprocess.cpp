// preprocess.cpp — Relative block construction.
#include "hamscope/preprocess.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

#include "hamscope/errors.hpp"

namespace hamscope {

void PreprocessConfig::validate() const {
    if (stride < 1) {
        throw std::invalid_argument("preprocess: stride must be at least 1");
    }
    if (window < 1) {
        throw std::invalid_argument("preprocess: window must be at least 1");
    }
    if (pinv_cutoff < 0.0 || pinv_cutoff >= 1.0) {
        throw std::invalid_argument("preprocess: pinv cutoff must lie in [0, 1)");
    }
    if (cond_limit <= 1.0) {
        throw std::invalid_argument("preprocess: condition limit must exceed 1");
    }
}

ComplexMatrix pseudo_inverse(const ComplexMatrix& a, double cutoff) {
    Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    RealVector inv = RealVector::Zero(sigma.size());
    const double floor_value = cutoff * sigma(0);
    for (long i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > floor_value && sigma(i) > 0.0) {
            inv(i) = 1.0 / sigma(i);
        }
    }
    return svd.matrixV() * inv.cast<Complex>().asDiagonal() * svd.matrixU().adjoint();
}

RelativeTimeSeries remove_ramp(const TimeSeriesData& series, const PreprocessConfig& cfg) {
    cfg.validate();
    const long num = series.grid.num_samples;
    const int n = series.dim();

    RelativeTimeSeries rel;
    rel.dt_ns = series.grid.dt_ns;
    rel.window = cfg.window;
    rel.dim = n;

    for (long anchor = 0; anchor < num; anchor += cfg.stride) {
        const ComplexMatrix& pivot = series.snapshots[static_cast<std::size_t>(anchor)];
        Eigen::JacobiSVD<ComplexMatrix> svd(pivot);
        const auto& sigma = svd.singularValues();
        if (sigma(0) <= 0.0 || sigma(sigma.size() - 1) <= 0.0 ||
            sigma(0) / sigma(sigma.size() - 1) > cfg.cond_limit) {
            continue;  // unreliable anchor
        }
        const ComplexMatrix inverse = pseudo_inverse(pivot, cfg.pinv_cutoff);

        RelativeBlock block;
        block.anchor_index = anchor;
        block.first_offset = std::max(-cfg.window, -anchor);
        const long last_offset = std::min(cfg.window, num - 1 - anchor);
        block.samples.reserve(static_cast<std::size_t>(last_offset - block.first_offset + 1));
        for (long d = block.first_offset; d <= last_offset; ++d) {
            const ComplexMatrix& snap = series.snapshots[static_cast<std::size_t>(anchor + d)];
            if (cfg.side == RampSide::Initial) {
                block.samples.push_back(snap * inverse);
            } else {
                block.samples.push_back(inverse * snap);
            }
        }
        rel.blocks.push_back(std::move(block));
    }

    if (rel.blocks.empty()) {
        throw IdentificationError("preprocess: every anchor was rejected as ill-conditioned");
    }
    return rel;
}

}  // namespace hamscope
