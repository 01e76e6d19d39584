// types.hpp — Shared scalar and matrix aliases plus the unit convention.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>

namespace hamscope {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr Complex kImag{0.0, 1.0};

// Matrix entries are cyclic frequencies in MHz, times are in ns, so a
// frequency f acting for a time t accumulates 2*pi*1e-3*f*t radians.
inline constexpr double kRadPerMHzNs = 2.0e-3 * std::numbers::pi;

// Phase in radians accumulated by a single entry h (MHz) over t (ns).
inline double phase_of(double h_mhz, double t_ns) {
    return kRadPerMHzNs * h_mhz * t_ns;
}

}  // namespace hamscope
