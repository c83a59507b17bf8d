#pragma once

// Entropic optimal transport: min <C,X> + gamma sum X log X s.t. X1 = p,
// X^T 1 = q, equivalently the KL projection of X0 = exp(-C/gamma) onto the
// marginal constraints.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sinkmd/errors.hpp"
#include "sinkmd/kernel.hpp"
#include "sinkmd/penalty.hpp"

namespace sinkmd {

/// Cost matrix C (N x M), regularization gamma > 0 and strictly positive
/// marginals p (length N) and q (length M) each summing to 1.
class OTProblem {
public:
    static constexpr double kMassTolerance = 1e-12;

    OTProblem(Matrix cost, double gamma, PositiveVector p, PositiveVector q)
        : cost_(std::move(cost)), gamma_(gamma), p_(std::move(p)), q_(std::move(q)) {
        if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
            throw DomainError("OTProblem: gamma must be finite and > 0");
        }
        detail::require_same_size(cost_.rows(), p_.size(), "OTProblem cost rows vs p");
        detail::require_same_size(cost_.cols(), q_.size(), "OTProblem cost cols vs q");
        for (double c : cost_.data()) {
            if (!std::isfinite(c)) throw DomainError("OTProblem: cost has a non-finite entry");
        }
        const auto mass = [](const PositiveVector& v) {
            return std::accumulate(v.begin(), v.end(), 0.0);
        };
        if (std::abs(mass(p_) - 1.0) > kMassTolerance) {
            throw DomainError("OTProblem: p does not sum to 1");
        }
        if (std::abs(mass(q_) - 1.0) > kMassTolerance) {
            throw DomainError("OTProblem: q does not sum to 1");
        }
    }

    const Matrix& cost() const noexcept { return cost_; }
    double gamma() const noexcept { return gamma_; }
    const PositiveVector& p() const noexcept { return p_; }
    const PositiveVector& q() const noexcept { return q_; }
    std::size_t rows() const noexcept { return cost_.rows(); }
    std::size_t cols() const noexcept { return cost_.cols(); }

private:
    Matrix cost_;
    double gamma_;
    PositiveVector p_;
    PositiveVector q_;
};

/// Dual potentials; the plan is diag(e^u) X0 diag(e^v).
struct Potentials {
    std::vector<double> u;
    std::vector<double> v;
};

/// log X0 = -C / gamma.
inline Matrix gibbs_kernel(const OTProblem& problem) {
    Matrix k(problem.rows(), problem.cols());
    const auto c = problem.cost().data();
    auto out = k.data();
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = -c[i] / problem.gamma();
    return k;
}

/// X_ij = exp(u_i - C_ij/gamma + v_j).
inline PositiveMatrix plan_from_potentials(const OTProblem& problem, const Potentials& pot) {
    detail::require_same_size(pot.u.size(), problem.rows(), "plan_from_potentials u");
    detail::require_same_size(pot.v.size(), problem.cols(), "plan_from_potentials v");
    Matrix x(problem.rows(), problem.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double l = pot.u[i] - problem.cost()(i, j) / problem.gamma() + pot.v[j];
            const double e = std::exp(l);
            if (!std::isfinite(l) || !std::isfinite(e) || e == 0.0) {
                throw RangeError("plan_from_potentials: entry (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") out of range (log value " +
                                 std::to_string(l) + ")");
            }
            x(i, j) = e;
        }
    }
    return PositiveMatrix(std::move(x));
}

inline std::vector<double> row_sums(const Matrix& x) {
    std::vector<double> r(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (double v : x.row(i)) r[i] += v;
    }
    return r;
}

inline std::vector<double> col_sums(const Matrix& x) {
    std::vector<double> c(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) c[j] += row[j];
    }
    return c;
}

/// <C, X>.
inline double transport_cost(const OTProblem& problem, const Matrix& x) {
    detail::require_same_size(x.rows(), problem.rows(), "transport_cost rows");
    detail::require_same_size(x.cols(), problem.cols(), "transport_cost cols");
    double s = 0.0;
    const auto c = problem.cost().data();
    const auto d = x.data();
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * d[k];
    return s;
}

inline double transport_cost(const OTProblem& problem, const PositiveMatrix& x) {
    return transport_cost(problem, x.matrix());
}

/// ||r - p||_1 + ||c - q||_1 from precomputed marginals.
inline double marginal_violation(const OTProblem& problem, std::span<const double> r,
                                 std::span<const double> c) {
    double v = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) v += std::abs(r[i] - problem.p()[i]);
    for (std::size_t j = 0; j < c.size(); ++j) v += std::abs(c[j] - problem.q()[j]);
    return v;
}

inline double marginal_violation(const OTProblem& problem, const Matrix& x) {
    return marginal_violation(problem, row_sums(x), col_sums(x));
}

/// <r, log(r/p) - 1> + <1,p> + <c, log(c/q) - 1> + <1,q> from marginals.
inline double ot_objective_from_marginals(const OTProblem& problem, std::span<const double> r,
                                          std::span<const double> c) {
    detail::require_positive(r, "ot_objective row sums");
    detail::require_positive(c, "ot_objective column sums");
    double f = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) f += detail::scalar_kl(r[i], problem.p()[i]);
    for (std::size_t j = 0; j < c.size(); ++j) f += detail::scalar_kl(c[j], problem.q()[j]);
    return f;
}

inline double ot_objective(const OTProblem& problem, const Matrix& x) {
    detail::require_same_size(x.rows(), problem.rows(), "ot_objective rows");
    detail::require_same_size(x.cols(), problem.cols(), "ot_objective cols");
    return ot_objective_from_marginals(problem, row_sums(x), col_sums(x));
}

inline double ot_objective(const OTProblem& problem, const PositiveMatrix& x) {
    return ot_objective(problem, x.matrix());
}

/// Two blocks over the row-major vec(X): N row-sum constraints (targets p)
/// and M column-sum constraints (targets q). Constraint i < N is row i,
/// constraint N + j is column j.
inline ConstraintSystem as_constraint_system(const OTProblem& problem) {
    const std::size_t n = problem.rows();
    const std::size_t m = problem.cols();
    std::vector<Hyperplane> rows;
    rows.reserve(n + m);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
        idx.clear();
        for (std::size_t j = 0; j < m; ++j) idx.push_back(i * m + j);
        rows.push_back(Hyperplane::indicator(idx, problem.p()[i]));
    }
    for (std::size_t j = 0; j < m; ++j) {
        idx.clear();
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i * m + j);
        rows.push_back(Hyperplane::indicator(idx, problem.q()[j]));
    }
    std::vector<std::vector<std::size_t>> blocks(2);
    for (std::size_t i = 0; i < n; ++i) blocks[0].push_back(i);
    for (std::size_t j = 0; j < m; ++j) blocks[1].push_back(n + j);
    return ConstraintSystem(n * m, std::move(rows), std::move(blocks));
}

/// Rounds a positive plan onto the transport polytope: scale rows down to at
/// most p, columns down to at most q, then add the rank-one correction
/// err_r err_c^T / ||err_r||_1 carrying the missing mass.
inline Matrix round_to_feasible(const OTProblem& problem, const Matrix& x) {
    detail::require_same_size(x.rows(), problem.rows(), "round_to_feasible rows");
    detail::require_same_size(x.cols(), problem.cols(), "round_to_feasible cols");
    detail::require_positive(x.data(), "round_to_feasible");
    Matrix y = x;
    const auto r = row_sums(y);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        const double s = std::min(problem.p()[i] / r[i], 1.0);
        for (double& v : y.row(i)) v *= s;
    }
    const auto c = col_sums(y);
    std::vector<double> col_scale(y.cols());
    for (std::size_t j = 0; j < y.cols(); ++j) col_scale[j] = std::min(problem.q()[j] / c[j], 1.0);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        auto row = y.row(i);
        for (std::size_t j = 0; j < y.cols(); ++j) row[j] *= col_scale[j];
    }
    auto err_r = row_sums(y);
    auto err_c = col_sums(y);
    double mass = 0.0;
    for (std::size_t i = 0; i < err_r.size(); ++i) {
        err_r[i] = std::max(problem.p()[i] - err_r[i], 0.0);
        mass += err_r[i];
    }
    for (std::size_t j = 0; j < err_c.size(); ++j) err_c[j] = std::max(problem.q()[j] - err_c[j], 0.0);
    if (mass > 0.0) {
        for (std::size_t i = 0; i < y.rows(); ++i) {
            auto row = y.row(i);
            for (std::size_t j = 0; j < y.cols(); ++j) row[j] += err_r[i] * err_c[j] / mass;
        }
    }
    return y;
}

}  // namespace sinkmd
