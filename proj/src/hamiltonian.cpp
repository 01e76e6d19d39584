#include "hamscope/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hamscope/errors.hpp"

namespace hamscope {

FrequencySet FrequencySet::from_values(RealVector values) {
    if (values.size() == 0) {
        throw std::invalid_argument("FrequencySet: empty frequency list");
    }
    std::sort(values.data(), values.data() + values.size());
    return FrequencySet{std::move(values)};
}

void FrequencySet::require_distinct(double tol_mhz) const {
    for (int k = 0; k + 1 < mhz.size(); ++k) {
        if (mhz(k + 1) - mhz(k) < tol_mhz) {
            throw DegeneracyError("frequencies " + std::to_string(mhz(k)) + " and " +
                                  std::to_string(mhz(k + 1)) + " MHz coincide within " +
                                  std::to_string(tol_mhz) + " MHz");
        }
    }
}

HamiltonianParams::HamiltonianParams(RealMatrix matrix, LatticeGeometry geometry)
    : matrix_(std::move(matrix)), geometry_(std::move(geometry)) {
    const int n = geometry_.num_sites();
    if (matrix_.rows() != n || matrix_.cols() != n) {
        throw std::invalid_argument("HamiltonianParams: matrix size does not match geometry");
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (matrix_(i, j) != matrix_(j, i)) {
                throw std::invalid_argument("HamiltonianParams: matrix is not symmetric");
            }
            if (matrix_(i, j) != 0.0 && !geometry_.has_edge(i, j)) {
                throw std::invalid_argument(
                    "HamiltonianParams: nonzero entry outside the declared support");
            }
        }
    }
}

HamiltonianParams build_harper(double b, double j_mhz, const LatticeGeometry& geometry) {
    const int n = geometry.num_sites();
    RealMatrix h = RealMatrix::Zero(n, n);
    for (int q = 0; q < n; ++q) {
        h(q, q) = 20.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(q + 1) * b);
    }
    for (const auto& [i, j] : geometry.edges()) {
        h(i, j) = j_mhz;
        h(j, i) = j_mhz;
    }
    return HamiltonianParams(std::move(h), geometry);
}

EigenDecomposition eig_symmetric(const RealMatrix& h) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw std::invalid_argument("eig_symmetric: matrix must be square and nonempty");
    }
    if (!h.isApprox(h.transpose(), 1e-12)) {
        throw std::invalid_argument("eig_symmetric: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eig_symmetric: eigendecomposition failed");
    }
    return EigenDecomposition{FrequencySet{solver.eigenvalues()}, solver.eigenvectors()};
}

ComplexMatrix propagator(const RealMatrix& h, double t_ns) {
    const EigenDecomposition eig = eig_symmetric(h);
    const int n = static_cast<int>(h.rows());
    ComplexVector phases(n);
    for (int k = 0; k < n; ++k) {
        phases(k) = std::exp(-kImag * phase_of(eig.frequencies.mhz(k), t_ns));
    }
    return eig.basis.cast<Complex>() * phases.asDiagonal() *
           eig.basis.transpose().cast<Complex>();
}

ComplexMatrix propagator(const HamiltonianParams& h, double t_ns) {
    return propagator(h.matrix(), t_ns);
}

double off_support_max(const RealMatrix& h, const BoolArray& support) {
    if (h.rows() != support.rows() || h.cols() != support.cols()) {
        throw std::invalid_argument("off_support_max: mask size mismatch");
    }
    double worst = 0.0;
    for (int i = 0; i < h.rows(); ++i) {
        for (int j = 0; j < h.cols(); ++j) {
            if (!support(i, j)) worst = std::max(worst, std::abs(h(i, j)));
        }
    }
    return worst;
}

}  // namespace hamscope
