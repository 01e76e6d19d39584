// chip_scan.cpp — Subset sampling and lattice-wide error aggregation.
#include "hamscope/chip_scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "hamscope/errors.hpp"
#include "hamscope/parallel.hpp"
#include "hamscope/rng.hpp"
#include "hamscope/simulator.hpp"

namespace hamscope {

std::vector<std::vector<int>> sample_connected_subsets(const LatticeGeometry& geometry,
                                                       int subset_size, int min_coverage,
                                                       std::uint64_t rng_seed,
                                                       long max_subsets) {
    const int n = geometry.num_sites();
    if (subset_size < 1 || subset_size > n) {
        throw std::invalid_argument("subset sampling: size must lie in [1, num_sites]");
    }
    if (min_coverage < 1) {
        throw std::invalid_argument("subset sampling: coverage must be positive");
    }
    if (subset_size < 2 && !geometry.edges().empty()) {
        throw std::invalid_argument("subset sampling: single-site subsets cannot cover edges");
    }

    std::vector<long> site_hits(static_cast<std::size_t>(n), 0);
    std::vector<long> edge_hits(geometry.edges().size(), 0);
    const auto covered = [&]() {
        for (long hits : site_hits) {
            if (hits < min_coverage) {
                return false;
            }
        }
        for (long hits : edge_hits) {
            if (hits < min_coverage) {
                return false;
            }
        }
        return true;
    };

    Rng rng(rng_seed);
    std::vector<std::vector<int>> subsets;
    std::vector<char> in_set(static_cast<std::size_t>(n));
    std::vector<char> in_frontier(static_cast<std::size_t>(n));
    for (long draw = 0; draw < max_subsets && !covered(); ++draw) {
        std::fill(in_set.begin(), in_set.end(), 0);
        std::fill(in_frontier.begin(), in_frontier.end(), 0);
        std::vector<int> sites;
        std::vector<int> frontier;

        const int start = rng.uniform_int(n);
        sites.push_back(start);
        in_set[static_cast<std::size_t>(start)] = 1;
        for (int neighbour : geometry.neighbours(start)) {
            frontier.push_back(neighbour);
            in_frontier[static_cast<std::size_t>(neighbour)] = 1;
        }
        while (static_cast<int>(sites.size()) < subset_size && !frontier.empty()) {
            const int pick = rng.uniform_int(static_cast<int>(frontier.size()));
            const int site = frontier[static_cast<std::size_t>(pick)];
            frontier.erase(frontier.begin() + pick);
            sites.push_back(site);
            in_set[static_cast<std::size_t>(site)] = 1;
            for (int neighbour : geometry.neighbours(site)) {
                if (!in_set[static_cast<std::size_t>(neighbour)] &&
                    !in_frontier[static_cast<std::size_t>(neighbour)]) {
                    frontier.push_back(neighbour);
                    in_frontier[static_cast<std::size_t>(neighbour)] = 1;
                }
            }
        }
        if (static_cast<int>(sites.size()) < subset_size) {
            continue;  // the component around the start is too small
        }

        std::sort(sites.begin(), sites.end());
        for (int site : sites) {
            ++site_hits[static_cast<std::size_t>(site)];
        }
        for (std::size_t e = 0; e < geometry.edges().size(); ++e) {
            const auto& [i, j] = geometry.edges()[e];
            if (in_set[static_cast<std::size_t>(i)] && in_set[static_cast<std::size_t>(j)]) {
                ++edge_hits[e];
            }
        }
        subsets.push_back(std::move(sites));
    }

    if (!covered()) {
        throw IdentificationError(
            "subset sampling: coverage target not reached within the draw cap");
    }
    return subsets;
}

void ChipScanConfig::validate() const {
    if (subset_size < 1) {
        throw std::invalid_argument("chip scan: subset size must be positive");
    }
    if (min_coverage < 1) {
        throw std::invalid_argument("chip scan: coverage must be positive");
    }
    if (b_values.empty()) {
        throw std::invalid_argument("chip scan: need at least one flux value");
    }
    if (j_mhz <= 0.0) {
        throw std::invalid_argument("chip scan: coupling must be positive");
    }
    if (grid.num_samples < 2) {
        throw std::invalid_argument("chip scan: need at least two samples");
    }
    if (shots < 0) {
        throw std::invalid_argument("chip scan: shots must be non-negative");
    }
    if (s_perturbation < 0.0) {
        throw std::invalid_argument("chip scan: perturbation scale must be non-negative");
    }
    identify.validate();
}

namespace {

struct RunOutcome {
    bool ok = false;
    std::string reason;
    RealMatrix deviation;     // |identified - target| on the subset
    double s_error = 0.0;     // preparation-map distance from the identity
    RealVector sign_events;   // 1 where the canonicalized sign is flipped
};

// A lone flipped site should register at that site no matter which subset
// position it lands in, so the gauge is fixed by majority: a pattern that is
// mostly -1 is the complement of the physical one.
RealVector canonical_sign_events(const RealVector& signs) {
    const auto n = signs.size();
    const long negatives = (signs.array() < 0.0).count();
    const double flip = 2L * negatives > n ? -1.0 : 1.0;
    RealVector events(n);
    for (long i = 0; i < n; ++i) {
        events(i) = flip * signs(i) < 0.0 ? 1.0 : 0.0;
    }
    return events;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return 0.5 * (values[mid - 1] + values[mid]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

}  // namespace

ChipScanReport chip_scan(const LatticeGeometry& geometry, const ChipScanConfig& cfg) {
    cfg.validate();
    const int n = geometry.num_sites();
    for (const auto& [site, bias] : cfg.detuning_bias_mhz) {
        if (site < 0 || site >= n) {
            throw std::invalid_argument("chip scan: detuning fault site out of range");
        }
    }
    for (const auto& [site, phase] : cfg.final_phase_rad) {
        if (site < 0 || site >= n) {
            throw std::invalid_argument("chip scan: phase fault site out of range");
        }
    }

    const auto subsets = sample_connected_subsets(geometry, cfg.subset_size, cfg.min_coverage,
                                                  Rng::derive(cfg.rng_seed, 0), cfg.max_subsets);

    std::vector<RealMatrix> targets;  // full-lattice target per flux value
    targets.reserve(cfg.b_values.size());
    for (double b : cfg.b_values) {
        targets.push_back(build_harper(b, cfg.j_mhz, geometry).matrix());
    }

    const std::size_t num_runs = subsets.size() * cfg.b_values.size();
    std::vector<RunOutcome> outcomes(num_runs);
    parallel_for(
        num_runs,
        [&](std::size_t r) {
            const std::size_t subset_index = r / cfg.b_values.size();
            const std::size_t b_index = r % cfg.b_values.size();
            const std::vector<int>& sites = subsets[subset_index];
            const int k = static_cast<int>(sites.size());
            const LatticeGeometry local = geometry.induced(sites);

            RealMatrix target_matrix(k, k);
            for (int a = 0; a < k; ++a) {
                for (int c = 0; c < k; ++c) {
                    target_matrix(a, c) = targets[b_index](sites[static_cast<std::size_t>(a)],
                                                           sites[static_cast<std::size_t>(c)]);
                }
            }
            const HamiltonianParams target(target_matrix, local);

            RealMatrix simulated = target_matrix;
            ComplexMatrix measure = ComplexMatrix::Identity(k, k);
            for (int a = 0; a < k; ++a) {
                const int site = sites[static_cast<std::size_t>(a)];
                if (auto it = cfg.detuning_bias_mhz.find(site);
                    it != cfg.detuning_bias_mhz.end()) {
                    simulated(a, a) += it->second;
                }
                if (auto it = cfg.final_phase_rad.find(site); it != cfg.final_phase_rad.end()) {
                    measure(a, a) = std::exp(kImag * it->second);
                }
            }

            const std::uint64_t run_seed =
                Rng::derive(cfg.rng_seed, 0xc4a50000ULL + static_cast<std::uint64_t>(r));
            ComplexMatrix prepare = ComplexMatrix::Identity(k, k);
            if (cfg.s_perturbation > 0.0) {
                Rng rng(Rng::derive(run_seed, 1));
                for (int a = 0; a < k; ++a) {
                    for (int c = 0; c < k; ++c) {
                        prepare(a, c) += cfg.s_perturbation * rng.normal();
                    }
                }
            }

            TimeSeriesData data =
                simulate_exact(simulated, SpamMap{prepare}, SpamMap{measure}, cfg.grid);
            if (cfg.shots > 0) {
                NoiseConfig noise;
                noise.shots = cfg.shots;
                noise.seed = Rng::derive(run_seed, 2);
                // A perturbed preparation map can push quadratures past 1/2.
                noise.clip_out_of_range = cfg.s_perturbation > 0.0;
                data = sample_shots(data, noise);
            }

            // Deviations are attributed to elements by pairing the sorted
            // estimated modes with the sorted target modes; the pairing is
            // meaningless once a frequency drifts past half the target's
            // smallest level spacing (e.g. when a degenerate target leaves
            // the model order unsupported), so such runs count as failed.
            const RealVector levels = eig_symmetric(target_matrix).frequencies.mhz;
            double association_limit = std::numeric_limits<double>::infinity();
            for (long m = 1; m < levels.size(); ++m) {
                association_limit = std::min(association_limit,
                                             0.5 * (levels(m) - levels(m - 1)));
            }

            RunOutcome& outcome = outcomes[r];
            try {
                IdentifyConfig identify_cfg = cfg.identify;
                identify_cfg.solve.rng_seed = Rng::derive(run_seed, 3);
                const IdentificationResult result = identify(data, target, identify_cfg);
                if (result.frequency_deviation.maxCoeff() > association_limit) {
                    outcome.reason = "frequency estimate exceeds half the target level spacing";
                    return;
                }
                outcome.deviation = entrywise_deviation(result.h, target_matrix);
                outcome.s_error = analog_accuracy(result.initial_map.matrix,
                                                  ComplexMatrix::Identity(k, k));
                outcome.sign_events = canonical_sign_events(result.signs);
                outcome.ok = true;
            } catch (const RankDeficiencyError& error) {
                outcome.reason = error.what();
            } catch (const DegeneracyError& error) {
                outcome.reason = error.what();
            } catch (const IdentificationError& error) {
                outcome.reason = error.what();
            }
        },
        cfg.max_threads);

    std::map<std::pair<int, int>, std::size_t> edge_index;
    for (std::size_t e = 0; e < geometry.edges().size(); ++e) {
        edge_index[geometry.edges()[e]] = e;
    }

    ChipScanReport report;
    report.num_sites = n;
    report.couplers = geometry.edges();
    report.runs_total = static_cast<long>(num_runs);

    std::vector<std::vector<double>> site_devs(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> coupler_devs(geometry.edges().size());
    std::vector<std::vector<double>> site_s(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> site_flips(static_cast<std::size_t>(n));

    for (std::size_t r = 0; r < num_runs; ++r) {
        const std::vector<int>& sites = subsets[r / cfg.b_values.size()];
        const RunOutcome& outcome = outcomes[r];
        if (!outcome.ok) {
            ++report.runs_failed;
            report.failures.push_back(
                ScanFailure{sites, cfg.b_values[r % cfg.b_values.size()], outcome.reason});
            continue;
        }
        const int k = static_cast<int>(sites.size());
        for (int a = 0; a < k; ++a) {
            const auto site = static_cast<std::size_t>(sites[static_cast<std::size_t>(a)]);
            site_devs[site].push_back(outcome.deviation(a, a));
            site_s[site].push_back(outcome.s_error);
            site_flips[site].push_back(outcome.sign_events(a));
            for (int c = a + 1; c < k; ++c) {
                const int gi = sites[static_cast<std::size_t>(a)];
                const int gj = sites[static_cast<std::size_t>(c)];
                const auto it = edge_index.find({std::min(gi, gj), std::max(gi, gj)});
                if (it != edge_index.end()) {
                    coupler_devs[it->second].push_back(outcome.deviation(a, c));
                }
            }
        }
    }

    report.site_median_mhz = RealVector::Zero(n);
    report.site_s_median = RealVector::Zero(n);
    report.site_signflip_mean = RealVector::Zero(n);
    report.site_coverage.assign(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
        const auto& samples = site_devs[static_cast<std::size_t>(s)];
        report.site_median_mhz(s) = median(samples);
        report.site_s_median(s) = median(site_s[static_cast<std::size_t>(s)]);
        report.site_signflip_mean(s) = mean(site_flips[static_cast<std::size_t>(s)]);
        report.site_coverage[static_cast<std::size_t>(s)] = static_cast<long>(samples.size());
    }
    report.coupler_median_mhz = RealVector::Zero(static_cast<long>(geometry.edges().size()));
    report.coupler_coverage.assign(geometry.edges().size(), 0);
    for (std::size_t e = 0; e < geometry.edges().size(); ++e) {
        report.coupler_median_mhz(static_cast<long>(e)) = median(coupler_devs[e]);
        report.coupler_coverage[e] = static_cast<long>(coupler_devs[e].size());
    }
    return report;
}

}  // namespace hamscope
