// ramp_model.cpp — Time-ordered integration of ramp trajectories.
#include "hamscope/ramp_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "hamscope/rng.hpp"

namespace hamscope {

void RampModelConfig::validate(int dim) const {
    if (idle_mhz.size() != dim) {
        throw std::invalid_argument("ramp model: idle detuning count does not match dimension");
    }
    if (speed_mhz_per_ns <= 0.0) {
        throw std::invalid_argument("ramp model: speed must be positive");
    }
    if (wait_ns < 0.0) {
        throw std::invalid_argument("ramp model: wait time must be non-negative");
    }
    if (step_ns <= 0.0) {
        throw std::invalid_argument("ramp model: integration step must be positive");
    }
}

namespace {

// Entry-wise position along the ramp at time t: move from `start` toward
// `end` at the common speed, holding once the final value is reached.
RealMatrix path_point(const RealMatrix& start, const RealMatrix& end, double speed, double t) {
    const double travelled = speed * t;
    RealMatrix h = start;
    for (int i = 0; i < h.rows(); ++i) {
        for (int j = 0; j < h.cols(); ++j) {
            const double dist = end(i, j) - start(i, j);
            if (std::abs(dist) <= travelled) {
                h(i, j) = end(i, j);
            } else {
                h(i, j) = start(i, j) + (dist > 0.0 ? travelled : -travelled);
            }
        }
    }
    return h;
}

}  // namespace

SpamMap simulate_ramp_map(const RealMatrix& h_target, const RampModelConfig& cfg,
                          RampDirection direction) {
    if (h_target.rows() != h_target.cols()) {
        throw std::invalid_argument("ramp model: target matrix must be square");
    }
    const int n = static_cast<int>(h_target.rows());
    cfg.validate(n);

    RealMatrix idle = RealMatrix::Zero(n, n);
    idle.diagonal() = cfg.idle_mhz;

    const RealMatrix& start = (direction == RampDirection::In) ? idle : h_target;
    const RealMatrix& end = (direction == RampDirection::In) ? h_target : idle;

    const double max_dist = (end - start).cwiseAbs().maxCoeff();
    const double duration = max_dist / cfg.speed_mhz_per_ns + cfg.wait_ns;
    if (duration == 0.0) {
        return SpamMap::identity(n);
    }

    const auto steps = static_cast<long>(std::ceil(duration / cfg.step_ns));
    const double delta = duration / static_cast<double>(steps);

    ComplexMatrix u = ComplexMatrix::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver;
    for (long k = 0; k < steps; ++k) {
        const double t_mid = (static_cast<double>(k) + 0.5) * delta;
        // Phases accrue relative to the idle frame.
        const RealMatrix generator = path_point(start, end, cfg.speed_mhz_per_ns, t_mid) - idle;
        solver.compute(generator);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("ramp model: eigendecomposition failed");
        }
        ComplexVector phases(n);
        for (int i = 0; i < n; ++i) {
            phases(i) = std::exp(-kImag * (kRadPerMHzNs * delta * solver.eigenvalues()(i)));
        }
        const ComplexMatrix step = solver.eigenvectors().cast<Complex>() * phases.asDiagonal() *
                                   solver.eigenvectors().transpose().cast<Complex>();
        u = step * u;  // later times act on the left
    }
    return SpamMap{u};
}

RealVector random_idle_detunings(int n, std::uint64_t seed, double lo, double hi) {
    if (n <= 0) {
        throw std::invalid_argument("ramp model: dimension must be positive");
    }
    if (!(0.0 <= lo && lo <= hi)) {
        throw std::invalid_argument("ramp model: need 0 <= lo <= hi");
    }
    Rng rng(seed);
    RealVector idle(n);
    for (int i = 0; i < n; ++i) {
        const double magnitude = lo + (hi - lo) * rng.uniform();
        idle(i) = rng.uniform() < 0.5 ? -magnitude : magnitude;
    }
    return idle;
}

}  // namespace hamscope
