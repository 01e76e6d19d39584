// spam_estimation.hpp — State preparation map estimation and sign gauge fixing.
#pragma once

#include <vector>

#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

// Back-rotates every snapshot with the identified Hamiltonian and averages:
//   S_hat = (2/L) sum_l exp(+i 2pi 1e-3 t_l h) y[l].
// For data generated as y[l] = 1/2 M exp(-i 2pi 1e-3 t_l h_true) S with an
// orthogonal M and h the rotated-frame Hamiltonian, this recovers M S
// exactly; otherwise it is the least-squares preparation map for the frame.
SpamMap estimate_initial_map(const TimeSeriesData& series, const RealMatrix& h);

struct SignCorrection {
    RealVector signs;        // entries +-1, first entry fixed to +1
    RealMatrix hamiltonian;  // diag(signs) * h_prime * diag(signs)
    SpamMap initial_map;     // diag(signs) * s_prime
    double residual;         // Frobenius distance of hamiltonian to the target
};

// Resolves the per-site sign gauge left by a diagonal-unitary measurement
// map: finds the +-1 diagonal conjugation bringing `h_prime` closest to
// `h_target` in Frobenius norm and applies the same signs to the estimated
// preparation map. Exhaustive over the 2^(n-1) sign patterns up to 24 sites,
// greedy single-flip descent beyond.
SignCorrection correct_diagonal_sign(const RealMatrix& h_prime, const SpamMap& s_prime,
                                     const RealMatrix& h_target);

}  // namespace hamscope
