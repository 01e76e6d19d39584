// identify.cpp — Pipeline orchestration: spectrum, basis, maps, alignment.
#include "hamscope/identify.hpp"

#include <stdexcept>

#include "hamscope/errors.hpp"

namespace hamscope {

void IdentifyConfig::validate() const {
    preprocess.validate();
    solve.validate();
    if (esprit_rows < 0) {
        throw std::invalid_argument("identify: hankel rows must be non-negative");
    }
    if (rank_tolerance_exact <= 0.0 || rank_tolerance_exact >= 1.0 ||
        rank_tolerance_sampled <= 0.0 || rank_tolerance_sampled >= 1.0) {
        throw std::invalid_argument("identify: rank tolerances must lie in (0, 1)");
    }
}

IdentificationResult identify(const TimeSeriesData& series, const HamiltonianParams& target,
                              const IdentifyConfig& cfg) {
    cfg.validate();
    const int n = series.dim();
    if (n == 0 || series.grid.num_samples < 2) {
        throw std::invalid_argument("identify: series is empty");
    }
    if (target.dim() != n) {
        throw std::invalid_argument("identify: target dimension does not match the data");
    }

    IdentificationResult result;

    EspritConfig esprit_cfg;
    esprit_cfg.model_order = n;
    esprit_cfg.hankel_rows = cfg.esprit_rows;
    esprit_cfg.rank_tolerance =
        series.exact() ? cfg.rank_tolerance_exact : cfg.rank_tolerance_sampled;
    result.frequencies = esprit(trace_signal(series), series.grid.dt_ns, esprit_cfg);

    const RelativeTimeSeries relative = remove_ramp(series, cfg.preprocess);
    const CollapsedSeries collapsed = CollapsedSeries::from_blocks(relative);

    const BoolArray support = target.geometry().support_mask();
    EigenSolveConfig solve_cfg = cfg.solve;
    if (!cfg.regularize) {
        solve_cfg.mu_stages = 0;
    }
    const EigenDecomposition target_eig = eig_symmetric(target.matrix());
    const RealMatrix* seed = cfg.seed_from_target ? &target_eig.basis : nullptr;
    const EigenbasisEstimate estimate =
        minimize_eigenbasis(result.frequencies, collapsed, &support, solve_cfg, seed);

    result.basis = estimate.basis;
    result.data_fit = estimate.data_fit;
    result.leakage = estimate.leakage;
    result.mu_used = estimate.mu_used;
    result.converged = estimate.converged;
    result.stages = estimate.stages;
    result.h_raw = assemble_hamiltonian(result.frequencies, result.basis);
    result.initial_map_raw = estimate_initial_map(series, result.h_raw);

    const SignCorrection correction =
        correct_diagonal_sign(result.h_raw, result.initial_map_raw, target.matrix());
    result.signs = correction.signs;
    result.h = correction.hamiltonian;
    result.initial_map = correction.initial_map;

    result.analog_error = analog_accuracy(result.h, target.matrix());
    result.frequency_deviation = match_frequencies(result.frequencies, target_eig.frequencies);
    result.diagnostics =
        fit_deviation(series, result.h_raw, result.initial_map_raw, SpamMap::identity(n));
    return result;
}

}  // namespace hamscope
