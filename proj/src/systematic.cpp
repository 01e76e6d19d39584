// systematic.cpp — Ramp-induced frame rotation bounds and phase fits.
#include "hamscope/systematic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "hamscope/metrics.hpp"
#include "hamscope/spam_estimation.hpp"

namespace hamscope {

RealMatrix nearest_orthogonal(const ComplexMatrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw std::invalid_argument("nearest orthogonal: matrix must be square");
    }
    const RealMatrix real_part = m.real();
    Eigen::JacobiSVD<RealMatrix> svd(real_part, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

SystematicErrors ramp_systematic(const RealMatrix& h_hat_prime, const RealMatrix& h_target,
                                 const RampModelConfig& cfg) {
    if (h_hat_prime.rows() != h_hat_prime.cols() || h_hat_prime.rows() != h_target.rows() ||
        h_hat_prime.cols() != h_target.cols()) {
        throw std::invalid_argument("ramp systematic: matrices must be square and equal sized");
    }
    const int n = static_cast<int>(h_hat_prime.rows());

    const SpamMap ramp = simulate_ramp_map(h_target, cfg, RampDirection::Out);
    SystematicErrors errors;
    errors.orthogonal_map = nearest_orthogonal(ramp.matrix);

    const RealMatrix back_rotated =
        errors.orthogonal_map.transpose() * h_hat_prime * errors.orthogonal_map;
    const SignCorrection aligned =
        correct_diagonal_sign(back_rotated, SpamMap::identity(n), h_hat_prime);
    errors.rotated = aligned.hamiltonian;

    const RealMatrix shift = errors.rotated - h_hat_prime;
    errors.diagonal = shift.diagonal().cwiseAbs().maxCoeff();
    RealMatrix off = shift;
    off.diagonal().setZero();
    errors.off_diagonal = n > 1 ? off.cwiseAbs().maxCoeff() : 0.0;
    errors.accuracy = analog_accuracy(errors.rotated, h_hat_prime);
    return errors;
}

namespace {

struct EnvelopeFit {
    double slope = 0.0;
    double offset = 0.0;
};

// Tight linear upper bound: minimizes the total slack sum(line - y) subject
// to line >= every point. The optimum of this linear program is attained
// with two active points (or a horizontal line through the single maximum),
// so candidates are enumerated directly.
EnvelopeFit fit_upper_envelope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t count = x.size();
    double best_slack = std::numeric_limits<double>::infinity();
    EnvelopeFit best;

    const auto consider = [&](double slope, double offset) {
        double slack = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            const double gap = slope * x[k] + offset - y[k];
            if (gap < -1e-9 * std::max(1.0, std::abs(y[k]))) {
                return;  // line passes below a point
            }
            slack += std::max(gap, 0.0);
        }
        if (slack < best_slack) {
            best_slack = slack;
            best = EnvelopeFit{slope, offset};
        }
    };

    for (std::size_t i = 0; i < count; ++i) {
        // Horizontal line through point i.
        consider(0.0, y[i]);
        for (std::size_t j = i + 1; j < count; ++j) {
            if (std::abs(x[i] - x[j]) < 1e-12) {
                continue;
            }
            const double slope = (y[j] - y[i]) / (x[j] - x[i]);
            consider(slope, y[i] - slope * x[i]);
        }
    }
    return best;
}

}  // namespace

PhaseCalibration diag_phase_calibration(const std::vector<PhaseCalibrationRun>& runs,
                                        double outlier_cutoff_deg) {
    PhaseCalibration calibration;
    for (const auto& run : runs) {
        const int n = run.series.dim();
        if (run.target_mhz.size() != n || run.idle_mhz.size() != n) {
            throw std::invalid_argument("calibration: run vectors must match the data dimension");
        }
        const RealMatrix target = run.target_mhz.asDiagonal();
        const SpamMap prepared = estimate_initial_map(run.series, target);
        for (int i = 0; i < n; ++i) {
            calibration.distances_mhz.push_back(std::abs(run.target_mhz(i) - run.idle_mhz(i)));
            calibration.phases_rad.push_back(std::abs(std::arg(prepared.matrix(i, i))));
        }
    }

    std::set<long> distinct;
    for (double d : calibration.distances_mhz) {
        distinct.insert(std::lround(d * 1e6));
    }
    if (distinct.size() < 3) {
        throw std::invalid_argument("calibration: need at least three distinct ramp distances");
    }

    const EnvelopeFit envelope =
        fit_upper_envelope(calibration.distances_mhz, calibration.phases_rad);
    calibration.envelope_slope_rad_per_mhz = envelope.slope;
    calibration.envelope_offset_rad = envelope.offset;
    calibration.total_time_ns = envelope.slope / kRadPerMHzNs;
    calibration.offset_deg = envelope.offset * 180.0 / std::numbers::pi;

    // Quadratic through the origin on the points below the outlier cutoff:
    // phase = a * distance + b * distance^2.
    const double cutoff_rad = outlier_cutoff_deg * std::numbers::pi / 180.0;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t k = 0; k < calibration.distances_mhz.size(); ++k) {
        if (calibration.phases_rad[k] < cutoff_rad) {
            xs.push_back(calibration.distances_mhz[k]);
            ys.push_back(calibration.phases_rad[k]);
        }
    }
    calibration.points_used_quadratic = static_cast<long>(xs.size());
    if (xs.size() >= 2) {
        RealMatrix design(static_cast<long>(xs.size()), 2);
        RealVector rhs(static_cast<long>(xs.size()));
        for (std::size_t k = 0; k < xs.size(); ++k) {
            design(static_cast<long>(k), 0) = xs[k];
            design(static_cast<long>(k), 1) = xs[k] * xs[k];
            rhs(static_cast<long>(k)) = ys[k];
        }
        const RealVector coeffs = design.colPivHouseholderQr().solve(rhs);
        calibration.quad_wait_ns = coeffs(0) / kRadPerMHzNs;
        calibration.quad_speed_mhz_per_ns =
            coeffs(1) > 1e-12 ? kRadPerMHzNs / (2.0 * coeffs(1))
                              : std::numeric_limits<double>::infinity();
    }
    return calibration;
}

}  // namespace hamscope
