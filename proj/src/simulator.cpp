#include "hamscope/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hamscope/rng.hpp"

namespace hamscope {

TimeSeriesData simulate_exact(const RealMatrix& h, const SpamMap& s, const SpamMap& m,
                              const TimeGrid& grid) {
    const int n = static_cast<int>(h.rows());
    if (s.dim() != n || m.dim() != n) {
        throw std::invalid_argument("simulate_exact: SPAM map size does not match Hamiltonian");
    }
    if (grid.num_samples < 2) {
        throw std::invalid_argument("simulate_exact: time grid is empty");
    }
    const EigenDecomposition eig = eig_symmetric(h);
    const ComplexMatrix basis = eig.basis.cast<Complex>();
    const ComplexMatrix left = m.matrix * basis;
    const ComplexMatrix right = basis.transpose() * s.matrix;

    TimeSeriesData out;
    out.grid = grid;
    out.snapshots.reserve(static_cast<std::size_t>(grid.num_samples));
    ComplexVector phases(n);
    for (int l = 0; l < grid.num_samples; ++l) {
        const double t = grid.time(l);
        for (int k = 0; k < n; ++k) {
            phases(k) = std::exp(-kImag * phase_of(eig.frequencies.mhz(k), t));
        }
        out.snapshots.push_back(0.5 * left * phases.asDiagonal() * right);
    }
    return out;
}

TimeSeriesData simulate_exact(const HamiltonianParams& h, const SpamMap& s, const SpamMap& m,
                              const TimeGrid& grid) {
    return simulate_exact(h.matrix(), s, m, grid);
}

namespace {

double sample_quadrature(double value, long shots, Rng& rng, bool clip) {
    if (std::abs(value) > 0.5) {
        if (!clip && std::abs(value) > 0.5 + 1e-9) {
            throw std::runtime_error("sample_shots: value outside [-1/2, 1/2]; "
                                     "enable clipping or reduce damping");
        }
        value = value > 0.0 ? 0.5 : -0.5;
    }
    const double p = 0.5 + value;
    const long successes = rng.binomial(shots, p);
    // Mean of `shots` readouts valued +1/2 (success) or -1/2.
    return static_cast<double>(successes) / static_cast<double>(shots) - 0.5;
}

}  // namespace

TimeSeriesData sample_shots(const TimeSeriesData& exact, const NoiseConfig& noise) {
    if (noise.shots <= 0) {
        throw std::invalid_argument("sample_shots: shot count must be positive");
    }
    if (noise.damping_rate_per_ns < 0.0) {
        throw std::invalid_argument("sample_shots: damping rate must be nonnegative");
    }
    const int n = exact.dim();
    TimeSeriesData out;
    out.grid = exact.grid;
    out.shots = noise.shots;
    out.snapshots.assign(exact.snapshots.size(), ComplexMatrix::Zero(n, n));

    bool clipped = false;
    Rng rng(noise.seed);
    for (std::size_t l = 0; l < exact.snapshots.size(); ++l) {
        const double t = exact.grid.time(static_cast<int>(l));
        const double envelope = std::exp(-noise.damping_rate_per_ns * t);
        for (int m = 0; m < n; ++m) {
            for (int c = 0; c < n; ++c) {
                const Complex v = exact.snapshots[l](m, c) * envelope;
                if (std::abs(v.real()) > 0.5 || std::abs(v.imag()) > 0.5) clipped = true;
                const double x = sample_quadrature(v.real(), noise.shots, rng,
                                                   noise.clip_out_of_range);
                const double p = sample_quadrature(v.imag(), noise.shots, rng,
                                                   noise.clip_out_of_range);
                out.snapshots[l](m, c) = Complex(x, p);
            }
        }
    }
    if (clipped && noise.clip_out_of_range) {
        // The caller opted in; leave a trace for diagnosis.
        std::fputs("sample_shots: warning: quadratures clipped to [-1/2, 1/2]\n", stderr);
    }
    return out;
}

SpamMap haar_random_unitary(int n, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("haar_random_unitary: dimension must be positive");
    Rng rng(seed);
    ComplexMatrix g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k) {
        const Complex d = r(k, k);
        const double mag = std::abs(d);
        q.col(k) *= (mag > 0.0) ? d / mag : Complex(1.0, 0.0);
    }
    return SpamMap{std::move(q)};
}

RealMatrix haar_random_orthogonal(int n, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("haar_random_orthogonal: dimension must be positive");
    Rng rng(seed);
    RealMatrix g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<RealMatrix> qr(g);
    RealMatrix q = qr.householderQ();
    const RealMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k) {
        if (r(k, k) < 0.0) q.col(k) = -q.col(k);
    }
    return q;
}

}  // namespace hamscope
