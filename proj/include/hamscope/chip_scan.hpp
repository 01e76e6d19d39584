// chip_scan.hpp — Lattice-wide error maps from random connected subsets.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hamscope/geometry.hpp"
#include "hamscope/identify.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

// Grows random connected induced subgraphs (seeded BFS with random frontier
// picks) until every site and every internal edge of the geometry appears
// in at least `min_coverage` subsets. Returns the chosen site sets, sorted
// ascending within each subset; duplicates are allowed. Throws
// IdentificationError when the coverage target is out of reach within
// `max_subsets` draws.
std::vector<std::vector<int>> sample_connected_subsets(const LatticeGeometry& geometry,
                                                       int subset_size, int min_coverage,
                                                       std::uint64_t rng_seed,
                                                       long max_subsets = 20000);

struct ChipScanConfig {
    int subset_size = 5;
    int min_coverage = 5;
    std::vector<double> b_values = {0.0, 0.5};
    double j_mhz = 20.0;
    TimeGrid grid{1.0, 201};
    long shots = 1000;  // 0 keeps exact expectation values
    std::uint64_t rng_seed = 0;
    long max_subsets = 20000;
    double s_perturbation = 0.0;  // preparation map I + scale * Gaussian per run
    std::map<int, double> detuning_bias_mhz;  // site -> simulated diagonal offset
    std::map<int, double> final_phase_rad;    // site -> simulated measurement phase
    IdentifyConfig identify;
    unsigned max_threads = 0;

    // Subset runs start from the subset target's eigenbasis, so random
    // restarts default off here.
    ChipScanConfig() { identify.solve.restarts = 0; }

    void validate() const;
};

struct ScanFailure {
    std::vector<int> sites;  // global site indices of the failed run
    double b = 0.0;
    std::string reason;
};

struct ChipScanReport {
    int num_sites = 0;
    std::vector<std::pair<int, int>> couplers;   // declared edges, (i, j) with i < j
    RealVector site_median_mhz;                  // median |diagonal deviation| per site
    RealVector coupler_median_mhz;               // median |edge deviation| per coupler
    RealVector site_s_median;                    // median preparation-map distance per site
    RealVector site_signflip_mean;               // mean sign-flip indicator per site
    std::vector<long> site_coverage;             // successful runs touching each site
    std::vector<long> coupler_coverage;          // successful runs covering each coupler
    long runs_total = 0;
    long runs_failed = 0;
    std::vector<ScanFailure> failures;
};

// Benchmarks the whole lattice: samples covered subsets, simulates each
// subset at every b value (with any configured planted faults), identifies,
// and aggregates per-element medians of the deviations plus per-site
// sign-flip rates. Identification failures are recorded and excluded from
// the medians. Deterministic for a fixed seed regardless of thread count.
ChipScanReport chip_scan(const LatticeGeometry& geometry, const ChipScanConfig& cfg);

}  // namespace hamscope
