// spam_estimation.cpp — Preparation map recovery and sign gauge search.
#include "hamscope/spam_estimation.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "hamscope/hamiltonian.hpp"

namespace hamscope {

SpamMap estimate_initial_map(const TimeSeriesData& series, const RealMatrix& h) {
    const int n = series.dim();
    if (h.rows() != n || h.cols() != n) {
        throw std::invalid_argument("initial map estimate: dimension mismatch");
    }
    const EigenDecomposition eig = eig_symmetric(h);
    const long num = series.grid.num_samples;
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    for (long l = 0; l < num; ++l) {
        const double t = series.grid.time(l);
        ComplexVector phases(n);
        for (int k = 0; k < n; ++k) {
            phases(k) = std::exp(kImag * phase_of(eig.frequencies.mhz(k), t));
        }
        const ComplexMatrix back = eig.basis.cast<Complex>() * phases.asDiagonal() *
                                   eig.basis.transpose().cast<Complex>();
        sum += back * series.snapshots[static_cast<std::size_t>(l)];
    }
    return SpamMap{(2.0 / static_cast<double>(num)) * sum};
}

namespace {

RealMatrix conjugate_by_signs(const RealMatrix& h, const RealVector& signs) {
    return signs.asDiagonal() * h * signs.asDiagonal();
}

// Alignment score: residual^2 = const - 2 * sum_{i<j} s_i s_j h_ij r_ij, so
// the best pattern maximizes the quadratic form over the coupling products.
double alignment(const RealMatrix& products, const RealVector& signs) {
    double q = 0.0;
    const int n = static_cast<int>(products.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            q += signs(i) * signs(j) * products(i, j);
        }
    }
    return q;
}

RealVector exhaustive_signs(const RealMatrix& products) {
    const int n = static_cast<int>(products.rows());
    RealVector signs = RealVector::Ones(n);
    double q = alignment(products, signs);
    RealVector best = signs;
    double best_q = q;
    // Gray-code walk over all patterns with the first sign fixed: each step
    // flips one sign, so the score updates in O(n).
    const std::uint64_t patterns = 1ULL << (n - 1);
    std::uint64_t gray_prev = 0;
    for (std::uint64_t idx = 1; idx < patterns; ++idx) {
        const std::uint64_t gray = idx ^ (idx >> 1);
        const std::uint64_t changed = gray ^ gray_prev;
        gray_prev = gray;
        int k = 1;
        for (std::uint64_t bit = changed; bit > 1; bit >>= 1) {
            ++k;
        }
        double coupled = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j != k) {
                coupled += signs(j) * products(std::min(j, k), std::max(j, k));
            }
        }
        q -= 2.0 * signs(k) * coupled;
        signs(k) = -signs(k);
        if (q > best_q) {
            best_q = q;
            best = signs;
        }
    }
    return best;
}

RealVector greedy_signs(const RealMatrix& products) {
    const int n = static_cast<int>(products.rows());
    RealVector signs = RealVector::Ones(n);
    bool improved = true;
    while (improved) {
        improved = false;
        for (int k = 1; k < n; ++k) {
            double coupled = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j != k) {
                    coupled += signs(j) * products(std::min(j, k), std::max(j, k));
                }
            }
            // Flipping s_k changes the score by -2 s_k * coupled.
            if (-2.0 * signs(k) * coupled > 1e-15) {
                signs(k) = -signs(k);
                improved = true;
            }
        }
    }
    return signs;
}

}  // namespace

SignCorrection correct_diagonal_sign(const RealMatrix& h_prime, const SpamMap& s_prime,
                                     const RealMatrix& h_target) {
    if (h_prime.rows() != h_prime.cols() || h_prime.rows() != h_target.rows() ||
        h_prime.cols() != h_target.cols()) {
        throw std::invalid_argument("sign correction: matrices must be square and equal sized");
    }
    if (s_prime.matrix.rows() != h_prime.rows() || s_prime.matrix.cols() != h_prime.cols()) {
        throw std::invalid_argument("sign correction: initial map dimension mismatch");
    }
    const int n = static_cast<int>(h_prime.rows());
    SignCorrection result;
    if (n == 1) {
        result.signs = RealVector::Ones(1);
        result.hamiltonian = h_prime;
        result.initial_map = s_prime;
        result.residual = std::abs(h_prime(0, 0) - h_target(0, 0));
        return result;
    }

    RealMatrix products = RealMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            products(i, j) = h_prime(i, j) * h_target(i, j);
        }
    }

    result.signs = n <= 24 ? exhaustive_signs(products) : greedy_signs(products);
    result.hamiltonian = conjugate_by_signs(h_prime, result.signs);
    result.initial_map = SpamMap{result.signs.cast<Complex>().asDiagonal() * s_prime.matrix};
    result.residual = (result.hamiltonian - h_target).norm();
    return result;
}

}  // namespace hamscope
