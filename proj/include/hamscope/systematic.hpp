// systematic.hpp — Final-ramp systematic error bounds and phase calibration.
#pragma once

#include <vector>

#include "hamscope/ramp_model.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

struct SystematicErrors {
    double diagonal = 0.0;      // max |shift| over diagonal entries
    double off_diagonal = 0.0;  // max |shift| over off-diagonal entries
    double accuracy = 0.0;      // dimension-normalized distance of the shift
    RealMatrix rotated;         // sign-corrected back-rotated estimate
    RealMatrix orthogonal_map;  // nearest real orthogonal map to the modeled ramp
};

// Nearest real orthogonal matrix to Re(m): the polar factor U W^T of the
// real part's SVD. Minimizes ||m - O|| over real orthogonal O because only
// the real part of the overlap enters the distance.
RealMatrix nearest_orthogonal(const ComplexMatrix& m);

// Models the readout ramp for the given target, back-rotates the raw
// estimate by the ramp's orthogonal part, sign-corrects, and reports the
// entry shifts as systematic error estimates.
SystematicErrors ramp_systematic(const RealMatrix& h_hat_prime, const RealMatrix& h_target,
                                 const RampModelConfig& cfg);

// One calibration experiment: data taken while idling at a diagonal target.
struct PhaseCalibrationRun {
    TimeSeriesData series;
    RealVector target_mhz;  // diagonal entries of the run's target
    RealVector idle_mhz;    // idle detunings the ramp started from
};

struct PhaseCalibration {
    std::vector<double> distances_mhz;  // one point per (run, site)
    std::vector<double> phases_rad;     // matching preparation-map phases
    double envelope_slope_rad_per_mhz = 0.0;
    double envelope_offset_rad = 0.0;
    double total_time_ns = 0.0;  // envelope slope divided by 2*pi*1e-3
    double offset_deg = 0.0;     // envelope offset in degrees
    double quad_speed_mhz_per_ns = 0.0;  // ramp speed from the quadratic fit
    double quad_wait_ns = 0.0;           // wait time from the quadratic fit
    long points_used_quadratic = 0;
};

// Extracts per-site preparation phases |arg(S_ii)| from diagonal-target
// runs, plots them against the ramp distance |target - idle|, and fits both
// a tight linear upper envelope (slope -> total ramp time, intercept ->
// offset) and a least-squares quadratic through the origin on points below
// the outlier cutoff (coefficients -> speed and wait time). Throws when the
// runs cover fewer than three distinct ramp distances.
PhaseCalibration diag_phase_calibration(const std::vector<PhaseCalibrationRun>& runs,
                                        double outlier_cutoff_deg = 140.0);

}  // namespace hamscope
