// bootstrap.cpp — Parametric resampling around an identified Hamiltonian.
#include "hamscope/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hamscope/errors.hpp"
#include "hamscope/esprit.hpp"
#include "hamscope/metrics.hpp"
#include "hamscope/parallel.hpp"
#include "hamscope/rng.hpp"
#include "hamscope/simulator.hpp"
#include "hamscope/spam_estimation.hpp"

namespace hamscope {

void BootstrapConfig::validate() const {
    if (quantile <= 0.0 || quantile >= 1.0) {
        throw std::invalid_argument("bootstrap: quantile must lie in (0, 1)");
    }
    if (resamples < 1) {
        throw std::invalid_argument("bootstrap: need at least one resample");
    }
    if (quantile >= 0.99 && resamples < 100) {
        throw std::invalid_argument("bootstrap: tail quantiles need at least 100 resamples");
    }
    if (shots < 0) {
        throw std::invalid_argument("bootstrap: shots must be non-negative");
    }
    preprocess.validate();
    solve.validate();
}

namespace {

struct ResampleRecord {
    bool ok = false;
    RealMatrix abs_deviation;
    double accuracy = 0.0;
    double frequency = 0.0;
};

// Value at the configured upper quantile: smallest order statistic whose
// rank covers the requested probability mass.
double upper_quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto index = static_cast<long>(std::ceil(q * n)) - 1;
    index = std::clamp(index, 0L, static_cast<long>(values.size()) - 1);
    return values[static_cast<std::size_t>(index)];
}

}  // namespace

StatisticalErrors bootstrap_errors(const RealMatrix& h_hat, const TimeGrid& grid,
                                   const BootstrapConfig& cfg) {
    cfg.validate();
    if (h_hat.rows() != h_hat.cols() || h_hat.rows() == 0) {
        throw std::invalid_argument("bootstrap: estimate must be square");
    }
    const int n = static_cast<int>(h_hat.rows());
    const EigenDecomposition reference = eig_symmetric(h_hat);
    const SpamMap measure = SpamMap::identity(n);

    std::vector<ResampleRecord> records(static_cast<std::size_t>(cfg.resamples));
    parallel_for(
        records.size(),
        [&](std::size_t r) {
            const std::uint64_t seed = Rng::derive(cfg.rng_seed, static_cast<std::uint64_t>(r));
            const SpamMap prepare = haar_random_unitary(n, Rng::derive(seed, 1));
            TimeSeriesData data = simulate_exact(h_hat, prepare, measure, grid);
            if (cfg.shots > 0) {
                NoiseConfig noise;
                noise.shots = cfg.shots;
                noise.seed = Rng::derive(seed, 2);
                data = sample_shots(data, noise);
            }

            ResampleRecord& record = records[r];
            try {
                EspritConfig esprit_cfg;
                esprit_cfg.model_order = n;
                esprit_cfg.rank_tolerance =
                    data.exact() ? cfg.rank_tolerance_exact : cfg.rank_tolerance_sampled;
                const FrequencySet freqs =
                    esprit(trace_signal(data), grid.dt_ns, esprit_cfg);

                const RelativeTimeSeries relative = remove_ramp(data, cfg.preprocess);
                const CollapsedSeries collapsed = CollapsedSeries::from_blocks(relative);
                EigenSolveConfig solve_cfg = cfg.solve;
                solve_cfg.rng_seed = Rng::derive(seed, 3);
                const EigenbasisEstimate estimate = minimize_eigenbasis(
                    freqs, collapsed, nullptr, solve_cfg, &reference.basis);

                const RealMatrix h_resampled =
                    assemble_hamiltonian(freqs, estimate.basis);
                const SignCorrection aligned =
                    correct_diagonal_sign(h_resampled, SpamMap::identity(n), h_hat);

                record.abs_deviation = (aligned.hamiltonian - h_hat).cwiseAbs();
                record.accuracy = analog_accuracy(aligned.hamiltonian, h_hat);
                record.frequency =
                    max_frequency_error(freqs, reference.frequencies);
                record.ok = true;
            } catch (const RankDeficiencyError&) {
            } catch (const DegeneracyError&) {
            } catch (const IdentificationError&) {
            }
        },
        cfg.max_threads);

    StatisticalErrors errors;
    for (const auto& record : records) {
        record.ok ? ++errors.resamples_used : ++errors.failures;
    }
    const double failure_rate =
        static_cast<double>(errors.failures) / static_cast<double>(cfg.resamples);
    if (failure_rate > 0.05) {
        throw IdentificationError("bootstrap: more than 5% of resamples failed to identify");
    }

    errors.per_entry = RealMatrix::Zero(n, n);
    std::vector<double> pool;
    pool.reserve(static_cast<std::size_t>(errors.resamples_used));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            pool.clear();
            for (const auto& record : records) {
                if (record.ok) {
                    pool.push_back(record.abs_deviation(i, j));
                }
            }
            errors.per_entry(i, j) = upper_quantile(pool, cfg.quantile);
        }
    }
    errors.per_entry_max = errors.per_entry.maxCoeff();

    pool.clear();
    for (const auto& record : records) {
        if (record.ok) {
            pool.push_back(record.accuracy);
        }
    }
    errors.accuracy = upper_quantile(pool, cfg.quantile);

    pool.clear();
    for (const auto& record : records) {
        if (record.ok) {
            pool.push_back(record.frequency);
        }
    }
    errors.frequency = upper_quantile(pool, cfg.quantile);
    return errors;
}

}  // namespace hamscope
