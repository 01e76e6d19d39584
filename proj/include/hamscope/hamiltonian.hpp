// hamiltonian.hpp — Supported Hamiltonians, spectra, and propagators.
#pragma once

#include "hamscope/geometry.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

// Frequencies in MHz, kept sorted ascending.
struct FrequencySet {
    RealVector mhz;

    static FrequencySet from_values(RealVector values);
    int size() const { return static_cast<int>(mhz.size()); }
    // Throws DegeneracyError when two frequencies are closer than tol.
    void require_distinct(double tol_mhz = 1e-6) const;
};

// A real symmetric matrix whose off-diagonal support is restricted to the
// declared edges of a geometry. Violations are rejected at construction;
// identified Hamiltonians, which may leak outside the support, are carried
// as plain matrices instead.
class HamiltonianParams {
  public:
    HamiltonianParams(RealMatrix matrix, LatticeGeometry geometry);

    const RealMatrix& matrix() const { return matrix_; }
    const LatticeGeometry& geometry() const { return geometry_; }
    int dim() const { return static_cast<int>(matrix_.rows()); }

  private:
    RealMatrix matrix_;
    LatticeGeometry geometry_;
};

// On-site energies 20*cos(2*pi*q*b) MHz for sites q = 1..N together with a
// uniform coupling j_mhz on every declared edge.
HamiltonianParams build_harper(double b, double j_mhz, const LatticeGeometry& geometry);

struct EigenDecomposition {
    FrequencySet frequencies;
    RealMatrix basis;  // columns are eigenvectors, ordered with frequencies
};

// Spectrum of a real symmetric matrix, ascending, with a real orthogonal
// eigenbasis satisfying h = V diag(f) V^T.
EigenDecomposition eig_symmetric(const RealMatrix& h);

// exp(-i * 2*pi*1e-3 * t * h) evaluated through the eigendecomposition.
ComplexMatrix propagator(const RealMatrix& h, double t_ns);
ComplexMatrix propagator(const HamiltonianParams& h, double t_ns);

// Maximum magnitude over entries excluded from the support mask.
double off_support_max(const RealMatrix& h, const BoolArray& support);

}  // namespace hamscope
