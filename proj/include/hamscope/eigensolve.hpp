// eigensolve.hpp — Eigenbasis recovery by Riemannian conjugate gradients on O(n).
#pragma once

#include <cstdint>
#include <vector>

#include "hamscope/hamiltonian.hpp"
#include "hamscope/preprocess.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

// All relative blocks sharing an offset d fit the same propagator
// exp(-i 2pi 1e-3 (d dt) h), so the least-squares objective collapses to a
// per-offset form: only the summed snapshots S_d, the sample counts n_d and
// the scalar sum of squared norms survive.
struct CollapsedSeries {
    std::vector<long> offsets;        // distinct offsets with at least one sample
    std::vector<ComplexMatrix> sums;  // S_d = sum over blocks of Y_{b,d}
    std::vector<long> counts;         // number of blocks contributing to each offset
    double constant = 0.0;            // sum of ||Y_{b,d}||_F^2 over all samples
    long total_samples = 0;
    double dt_ns = 0.0;
    int dim = 0;

    static CollapsedSeries from_blocks(const RelativeTimeSeries& rel);
};

struct EigenSolveConfig {
    int max_iterations = 2000;
    double gradient_tolerance = 1e-8;
    int restarts = 8;                  // random initial bases tried per solve
    double armijo_shrink = 0.5;
    double sufficient_decrease = 1e-4;
    double mu_initial = 1.0;
    double mu_factor = 1.6;
    int mu_stages = 12;
    double fit_margin = 0.05;          // stage accepted if fit <= (1+margin)*reference
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Objective on the orthogonal group for fixed frequencies:
//   f(V) = sum_{d} sum_{blocks} ||Y_{b,d} - V E_d V^T||_F^2 + mu ||(V L V^T) off support||_F
// with E_d the diagonal propagator phases and L = diag(frequencies). The
// value is evaluated honestly for arbitrary (not necessarily orthogonal) V
// so that ambient finite differences match the Euclidean gradient.
class EigenbasisObjective {
public:
    EigenbasisObjective(const FrequencySet& freqs, const CollapsedSeries& data,
                        const BoolArray* support, double mu);

    double value(const RealMatrix& v) const;
    double data_fit(const RealMatrix& v) const;
    double leakage(const RealMatrix& v) const;  // off-support Frobenius norm of V L V^T
    RealMatrix euclidean_gradient(const RealMatrix& v) const;

    double mu() const { return mu_; }
    int dim() const { return dim_; }

private:
    const CollapsedSeries& data_;
    std::vector<ComplexVector> phases_;  // E_d diagonals per stored offset
    RealVector lambda_;
    BoolArray off_support_;
    bool regularized_ = false;
    double mu_ = 0.0;
    int dim_ = 0;
};

// Skew generator of the Riemannian gradient flow: G = grad V^T - V grad^T.
// Along V(t) = exp(-t G) V the objective decreases with slope -0.5 ||G||_F^2.
RealMatrix skew_generator(const RealMatrix& v, const RealMatrix& euclidean_grad);

// Retraction: exp(-alpha * skew) * v.
RealMatrix rotate_by(const RealMatrix& skew, double alpha, const RealMatrix& v);

struct MuStage {
    double mu = 0.0;
    double data_fit = 0.0;
    double leakage = 0.0;
    bool accepted = false;
};

struct EigenbasisEstimate {
    RealMatrix basis;
    double data_fit = 0.0;
    double leakage = 0.0;
    double mu_used = 0.0;         // regularization weight of the returned basis
    bool converged = false;       // best unregularized start met the gradient tolerance
    int iterations = 0;           // conjugate gradient steps across all starts/stages
    std::vector<MuStage> stages;  // regularization ramp record, empty when disabled
};

// Minimizes the data-fit objective with multi-start conjugate gradients,
// then (when `support` is given) ramps the support regularizer geometrically,
// accepting each stage only while the data fit stays within the configured
// margin of the unregularized optimum. `seed_basis`, when given, is screened
// over its 2^(n-1) row-sign variants and used as an additional start.
EigenbasisEstimate minimize_eigenbasis(const FrequencySet& freqs, const CollapsedSeries& data,
                                       const BoolArray* support, const EigenSolveConfig& cfg,
                                       const RealMatrix* seed_basis = nullptr);

// V diag(frequencies) V^T, symmetrized to scrub rounding asymmetry.
RealMatrix assemble_hamiltonian(const FrequencySet& freqs, const RealMatrix& basis);

}  // namespace hamscope
