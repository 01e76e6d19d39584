// eigensolve.cpp — Collapsed objective and conjugate-gradient basis search.
#include "hamscope/eigensolve.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "hamscope/rng.hpp"
#include "hamscope/simulator.hpp"

namespace hamscope {

CollapsedSeries CollapsedSeries::from_blocks(const RelativeTimeSeries& rel) {
    if (rel.blocks.empty()) {
        throw std::invalid_argument("collapse: no relative blocks");
    }
    CollapsedSeries out;
    out.dt_ns = rel.dt_ns;
    out.dim = rel.dim;

    std::map<long, std::pair<ComplexMatrix, long>> acc;
    for (const auto& block : rel.blocks) {
        for (std::size_t k = 0; k < block.samples.size(); ++k) {
            const long d = block.first_offset + static_cast<long>(k);
            const ComplexMatrix& y = block.samples[k];
            auto it = acc.find(d);
            if (it == acc.end()) {
                acc.emplace(d, std::make_pair(y, 1L));
            } else {
                it->second.first += y;
                it->second.second += 1;
            }
            out.constant += y.squaredNorm();
            out.total_samples += 1;
        }
    }
    for (auto& [d, entry] : acc) {
        out.offsets.push_back(d);
        out.sums.push_back(std::move(entry.first));
        out.counts.push_back(entry.second);
    }
    return out;
}

void EigenSolveConfig::validate() const {
    if (max_iterations < 1) {
        throw std::invalid_argument("eigensolve: max iterations must be positive");
    }
    if (gradient_tolerance <= 0.0) {
        throw std::invalid_argument("eigensolve: gradient tolerance must be positive");
    }
    if (restarts < 0) {
        throw std::invalid_argument("eigensolve: restarts must be non-negative");
    }
    if (armijo_shrink <= 0.0 || armijo_shrink >= 1.0) {
        throw std::invalid_argument("eigensolve: line search shrink must lie in (0, 1)");
    }
    if (sufficient_decrease <= 0.0 || sufficient_decrease >= 1.0) {
        throw std::invalid_argument("eigensolve: sufficient decrease must lie in (0, 1)");
    }
    if (mu_initial < 0.0 || mu_factor <= 1.0 || mu_stages < 0) {
        throw std::invalid_argument("eigensolve: invalid regularization ramp");
    }
    if (fit_margin < 0.0) {
        throw std::invalid_argument("eigensolve: fit margin must be non-negative");
    }
}

EigenbasisObjective::EigenbasisObjective(const FrequencySet& freqs, const CollapsedSeries& data,
                                         const BoolArray* support, double mu)
    : data_(data), lambda_(freqs.mhz), mu_(mu), dim_(data.dim) {
    if (freqs.mhz.size() != data.dim) {
        throw std::invalid_argument("eigensolve: frequency count does not match dimension");
    }
    phases_.reserve(data.offsets.size());
    for (std::size_t i = 0; i < data.offsets.size(); ++i) {
        const double t = static_cast<double>(data.offsets[i]) * data.dt_ns;
        ComplexVector e(dim_);
        for (int k = 0; k < dim_; ++k) {
            e(k) = std::exp(-kImag * phase_of(lambda_(k), t));
        }
        phases_.push_back(std::move(e));
    }
    if (support != nullptr) {
        if (support->rows() != dim_ || support->cols() != dim_) {
            throw std::invalid_argument("eigensolve: support mask dimension mismatch");
        }
        off_support_ = !(*support);
        regularized_ = mu_ > 0.0;
    }
}

double EigenbasisObjective::data_fit(const RealMatrix& v) const {
    const ComplexMatrix vc = v.cast<Complex>();
    const RealMatrix b = v.transpose() * v;

    double total = data_.constant;
    for (std::size_t i = 0; i < phases_.size(); ++i) {
        const ComplexVector& e = phases_[i];
        // cross term: -2 Re tr(S_d^dag V E_d V^T) via the diagonal of V^T S_d V
        const ComplexMatrix t = data_.sums[i] * vc;
        Complex cross{0.0, 0.0};
        for (int k = 0; k < dim_; ++k) {
            const Complex diag_k = vc.col(k).dot(t.col(k));  // conj(v_k) . t_k, v real
            cross += e(k) * std::conj(diag_k);
        }
        total -= 2.0 * cross.real();
        // model norm: ||V E_d V^T||_F^2 = sum_{k,k'} B_{kk'}^2 Re(e_k' conj(e_k))
        double model = 0.0;
        for (int k = 0; k < dim_; ++k) {
            for (int kk = 0; kk < dim_; ++kk) {
                model += b(k, kk) * b(k, kk) * (e(kk) * std::conj(e(k))).real();
            }
        }
        total += static_cast<double>(data_.counts[i]) * model;
    }
    return total;
}

double EigenbasisObjective::leakage(const RealMatrix& v) const {
    if (off_support_.size() == 0) {
        return 0.0;
    }
    const RealMatrix h = v * lambda_.asDiagonal() * v.transpose();
    return off_support_.select(h.array(), 0.0).matrix().norm();
}

double EigenbasisObjective::value(const RealMatrix& v) const {
    double total = data_fit(v);
    if (regularized_) {
        total += mu_ * leakage(v);
    }
    return total;
}

RealMatrix EigenbasisObjective::euclidean_gradient(const RealMatrix& v) const {
    const ComplexMatrix vc = v.cast<Complex>();
    const RealMatrix b = v.transpose() * v;

    RealMatrix grad = RealMatrix::Zero(dim_, dim_);
    for (std::size_t i = 0; i < phases_.size(); ++i) {
        const ComplexVector& e = phases_[i];
        const ComplexMatrix folded = (data_.sums[i] + data_.sums[i].transpose()).conjugate();
        grad -= 2.0 * (folded * vc * e.asDiagonal()).real();
        // model-norm part: 2 n_d V M with M_{kk'} = 2 B_{kk'} Re(conj(e_k) e_k')
        RealMatrix m(dim_, dim_);
        for (int k = 0; k < dim_; ++k) {
            for (int kk = 0; kk < dim_; ++kk) {
                m(k, kk) = 2.0 * b(k, kk) * (std::conj(e(k)) * e(kk)).real();
            }
        }
        grad += 2.0 * static_cast<double>(data_.counts[i]) * (v * m);
    }

    if (regularized_) {
        const RealMatrix h = v * lambda_.asDiagonal() * v.transpose();
        const RealMatrix w = off_support_.select(h.array(), 0.0).matrix();
        const double wnorm = w.norm();
        if (wnorm > 1e-30) {  // subgradient 0 at the kink
            grad += (2.0 * mu_ / wnorm) * (w * v * lambda_.asDiagonal());
        }
    }
    return grad;
}

RealMatrix skew_generator(const RealMatrix& v, const RealMatrix& euclidean_grad) {
    return euclidean_grad * v.transpose() - v * euclidean_grad.transpose();
}

RealMatrix rotate_by(const RealMatrix& skew, double alpha, const RealMatrix& v) {
    const RealMatrix generator = -alpha * skew;
    return generator.exp() * v;
}

namespace {

double frobenius_inner(const RealMatrix& a, const RealMatrix& b) {
    return a.cwiseProduct(b).sum();
}

RealMatrix polar_orthonormalize(const RealMatrix& v) {
    Eigen::JacobiSVD<RealMatrix> svd(v, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

struct CgResult {
    RealMatrix v;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;  // gradient tolerance met, or descent exhausted
};

CgResult conjugate_gradient(const EigenbasisObjective& obj, RealMatrix v,
                            const EigenSolveConfig& cfg) {
    const int n = obj.dim();
    const RealMatrix identity = RealMatrix::Identity(n, n);
    if ((v.transpose() * v - identity).norm() > 1e-12) {
        v = polar_orthonormalize(v);
    }

    double f = obj.value(v);
    RealMatrix grad = obj.euclidean_gradient(v);
    RealMatrix g = skew_generator(v, grad);
    double gnorm2 = g.squaredNorm();

    RealMatrix dir = g;
    bool dir_is_gradient = true;
    double alpha_seed = std::numeric_limits<double>::infinity();

    CgResult result;
    int iter = 0;
    for (; iter < cfg.max_iterations; ++iter) {
        if (std::sqrt(gnorm2) <= cfg.gradient_tolerance) {
            result.converged = true;
            break;
        }
        double slope = 0.5 * frobenius_inner(g, dir);
        if (slope <= 0.0 && !dir_is_gradient) {
            dir = g;
            dir_is_gradient = true;
            slope = 0.5 * gnorm2;
        }
        const double dnorm = dir.norm();
        if (dnorm == 0.0) {
            result.converged = true;
            break;
        }

        // Backtracking line search along V(alpha) = exp(-alpha dir) V; trial
        // rotations start no larger than pi.
        double alpha = std::min(alpha_seed, std::numbers::pi / dnorm);
        bool accepted = false;
        RealMatrix rot;
        RealMatrix v_trial;
        double f_trial = 0.0;
        while (alpha * dnorm > 1e-16) {
            rot = rotate_by(dir, alpha, identity);
            v_trial = rot * v;
            f_trial = obj.value(v_trial);
            if (f_trial <= f - cfg.sufficient_decrease * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= cfg.armijo_shrink;
        }
        if (!accepted) {
            if (dir_is_gradient) {
                result.converged = true;  // steepest descent exhausted: stagnation
                break;
            }
            dir = g;
            dir_is_gradient = true;
            alpha_seed = std::numeric_limits<double>::infinity();
            continue;
        }

        v = v_trial;
        f = f_trial;
        if ((v.transpose() * v - identity).norm() > 1e-12) {
            v = polar_orthonormalize(v);
            f = obj.value(v);
        }

        grad = obj.euclidean_gradient(v);
        const RealMatrix g_new = skew_generator(v, grad);
        const double gnorm2_new = g_new.squaredNorm();

        // Polak-Ribiere with transport of the previous quantities by the
        // rotation just applied (generators conjugate under left translation).
        const RealMatrix g_old_moved = rot * g * rot.transpose();
        double beta = 0.0;
        if (gnorm2 > 0.0) {
            beta = std::max(0.0, frobenius_inner(g_new, g_new - g_old_moved) / gnorm2);
        }
        if (beta > 0.0) {
            dir = g_new + beta * (rot * dir * rot.transpose());
            dir_is_gradient = false;
            if (frobenius_inner(g_new, dir) <= 0.0) {
                dir = g_new;
                dir_is_gradient = true;
            }
        } else {
            dir = g_new;
            dir_is_gradient = true;
        }
        g = g_new;
        gnorm2 = gnorm2_new;
        alpha_seed = alpha / cfg.armijo_shrink;
    }

    result.v = std::move(v);
    result.value = f;
    result.iterations = iter;
    return result;
}

// Screens row-sign variants diag(s) V of a seed basis (exhaustive for small
// n) and returns the variant with the lowest objective value.
RealMatrix best_sign_variant(const EigenbasisObjective& obj, const RealMatrix& seed) {
    const int n = static_cast<int>(seed.rows());
    if (n < 2 || n > 11) {
        return seed;
    }
    RealMatrix best = seed;
    double best_value = obj.value(seed);
    const std::uint64_t patterns = 1ULL << (n - 1);
    RealVector signs(n);
    for (std::uint64_t idx = 1; idx < patterns; ++idx) {
        signs(0) = 1.0;
        for (int k = 1; k < n; ++k) {
            signs(k) = (idx >> (k - 1)) & 1ULL ? -1.0 : 1.0;
        }
        const RealMatrix candidate = signs.asDiagonal() * seed;
        const double value = obj.value(candidate);
        if (value < best_value) {
            best_value = value;
            best = candidate;
        }
    }
    return best;
}

}  // namespace

EigenbasisEstimate minimize_eigenbasis(const FrequencySet& freqs, const CollapsedSeries& data,
                                       const BoolArray* support, const EigenSolveConfig& cfg,
                                       const RealMatrix* seed_basis) {
    cfg.validate();
    const int n = data.dim;
    if (freqs.mhz.size() != n) {
        throw std::invalid_argument("eigensolve: frequency count does not match dimension");
    }

    const EigenbasisObjective fit_objective(freqs, data, support, 0.0);

    std::vector<RealMatrix> starts;
    if (seed_basis != nullptr) {
        if (seed_basis->rows() != n || seed_basis->cols() != n) {
            throw std::invalid_argument("eigensolve: seed basis dimension mismatch");
        }
        starts.push_back(best_sign_variant(fit_objective, *seed_basis));
    }
    for (int r = 0; r < cfg.restarts; ++r) {
        starts.push_back(
            haar_random_orthogonal(n, Rng::derive(cfg.rng_seed, 0x5eed0000ULL + r)));
    }
    if (starts.empty()) {
        starts.push_back(RealMatrix::Identity(n, n));
    }

    EigenbasisEstimate estimate;
    double best_value = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        CgResult run = conjugate_gradient(fit_objective, start, cfg);
        estimate.iterations += run.iterations;
        if (run.value < best_value) {
            best_value = run.value;
            estimate.basis = std::move(run.v);
            estimate.converged = run.converged;
        }
    }

    if (support != nullptr && cfg.mu_stages > 0 && cfg.mu_initial > 0.0) {
        const double reference_fit = fit_objective.data_fit(estimate.basis);
        // Tiny absolute slack so exact data (reference fit ~ 0) still admits
        // floating-point-level increases.
        const double slack = 1e-12 * std::max(1.0, data.constant);
        double mu = cfg.mu_initial;
        for (int stage = 0; stage < cfg.mu_stages; ++stage) {
            const EigenbasisObjective staged(freqs, data, support, mu);
            CgResult run = conjugate_gradient(staged, estimate.basis, cfg);
            estimate.iterations += run.iterations;

            MuStage record;
            record.mu = mu;
            record.data_fit = staged.data_fit(run.v);
            record.leakage = staged.leakage(run.v);
            record.accepted =
                record.data_fit <= (1.0 + cfg.fit_margin) * reference_fit + slack;
            estimate.stages.push_back(record);
            if (!record.accepted) {
                break;  // keep the last accepted basis
            }
            estimate.basis = std::move(run.v);
            estimate.mu_used = mu;
            mu *= cfg.mu_factor;
        }
    }

    estimate.data_fit = fit_objective.data_fit(estimate.basis);
    estimate.leakage = fit_objective.leakage(estimate.basis);
    return estimate;
}

RealMatrix assemble_hamiltonian(const FrequencySet& freqs, const RealMatrix& basis) {
    if (basis.rows() != basis.cols() || basis.rows() != freqs.mhz.size()) {
        throw std::invalid_argument("assemble: basis and frequency sizes disagree");
    }
    const RealMatrix h = basis * freqs.mhz.asDiagonal() * basis.transpose();
    return 0.5 * (h + h.transpose());
}

}  // namespace hamscope
