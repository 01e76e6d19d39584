// ramp_model.hpp — Pulse-ramp model for state preparation and measurement maps.
#pragma once

#include <cstdint>

#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

// Ramps run at a fixed entry-wise speed between the idle configuration
// (a diagonal matrix of detunings, zero couplings) and the target
// Hamiltonian. Every entry moves toward its final value and stays there
// once reached; the common duration is the slowest entry's travel time
// plus a wait.
struct RampModelConfig {
    RealVector idle_mhz;            // diagonal of the idle matrix
    double speed_mhz_per_ns = 150.0;
    double wait_ns = 0.1;
    double step_ns = 0.01;          // product-integration step

    void validate(int dim) const;
};

enum class RampDirection {
    In,   // idle -> target, models the state preparation map S
    Out,  // target -> idle, models the measurement map M
};

// Time-ordered exponential of the ramp trajectory, integrated with the
// midpoint rule. Phases are accrued relative to the idle configuration, so
// a ramp that never leaves idle is the identity.
SpamMap simulate_ramp_map(const RealMatrix& h_target, const RampModelConfig& cfg,
                          RampDirection direction);

// Idle detunings drawn uniformly from +-[lo, hi] MHz with random signs.
RealVector random_idle_detunings(int n, std::uint64_t seed, double lo = 100.0,
                                 double hi = 500.0);

}  // namespace hamscope
