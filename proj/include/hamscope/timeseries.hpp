// timeseries.hpp — Sampled quadrature data on a uniform time grid.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hamscope/types.hpp"

namespace hamscope {

// Uniform grid t_l = l * dt_ns for l = 0 .. num_samples-1.
struct TimeGrid {
    double dt_ns = 1.0;
    int num_samples = 0;

    TimeGrid() = default;
    TimeGrid(double dt, int samples);
    double time(int l) const { return dt_ns * static_cast<double>(l); }
};

// A state preparation or measurement map. Arbitrary complex, typically close
// to a (diagonal) unitary.
struct SpamMap {
    ComplexMatrix matrix;

    static SpamMap identity(int n) { return SpamMap{ComplexMatrix::Identity(n, n)}; }
    int dim() const { return static_cast<int>(matrix.rows()); }
};

// Complex series y[m][n][l], stored as one N x N matrix per time point.
// Entry (m, n) holds x + i p for the series started at site n and read out
// at site m; magnitudes never exceed 1/2 up to shot noise slack.
struct TimeSeriesData {
    std::vector<ComplexMatrix> snapshots;
    TimeGrid grid;
    std::optional<long> shots;  // nullopt: exact expectation values

    int dim() const { return snapshots.empty() ? 0 : static_cast<int>(snapshots[0].rows()); }
    bool exact() const { return !shots.has_value(); }

    // Largest entry magnitude across all snapshots.
    double max_abs() const;
    // Throws when an entry magnitude exceeds 1/2 by more than the slack
    // appropriate for the stored shot count.
    void validate_range() const;

    std::string to_json_text() const;
    static TimeSeriesData from_json_text(const std::string& text);
    void save(const std::string& path) const;
    static TimeSeriesData load(const std::string& path);

    // One row per (series, site, time) sample with columns m, n, t, x, p.
    // Indices are 1-based to match the geometry file convention.
    std::string to_csv() const;
    void save_csv(const std::string& path) const;
};

}  // namespace hamscope
