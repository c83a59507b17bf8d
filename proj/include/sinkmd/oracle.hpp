#pragma once

// Independent reference computations: finite differences, a numeric 1-D prox,
// reference solves by exact cyclic projections, and the closed-form 2x2
// entropic transport plan. None of these go through the solver code paths.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sinkmd/errors.hpp"
#include "sinkmd/kernel.hpp"
#include "sinkmd/penalty.hpp"
#include "sinkmd/projection.hpp"

namespace sinkmd::oracle {

struct OracleConfig {
    double fd_step = 1e-6;
    double ref_tol = 1e-13;
    std::size_t ref_max_iter = 1000000;
};

using ScalarField = std::function<double(std::span<const double>)>;

/// Central differences with step fd_step * x_j per coordinate.
inline std::vector<double> fd_gradient(const ScalarField& field, const PositiveVector& x,
                                       const OracleConfig& cfg = {}) {
    std::vector<double> point = x.vector();
    std::vector<double> g(point.size());
    for (std::size_t j = 0; j < point.size(); ++j) {
        const double xj = point[j];
        const double h = cfg.fd_step * xj;
        point[j] = xj + h;
        const double up = field(point);
        point[j] = xj - h;
        const double down = field(point);
        point[j] = xj;
        g[j] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Cyclic exact KL projections (project_general on every row, in index
/// order) until the l1 violation is at most ref_tol.
inline PositiveVector reference_solve(const ConstraintSystem& system, const PositiveVector& x0,
                                      const OracleConfig& cfg = {}) {
    detail::require_same_size(x0.size(), system.dimension(), "reference_solve");
    PositiveVector x = x0;
    for (std::size_t sweep = 0; sweep < cfg.ref_max_iter; ++sweep) {
        if (l1_violation(system, x.values()) <= cfg.ref_tol) return x;
        for (const auto& row : system.rows()) {
            x = project_general(x, row, ProjectionOptions{1e-15, 200});
        }
    }
    if (l1_violation(system, x.values()) <= cfg.ref_tol) return x;
    throw ConvergenceError("reference_solve: iteration cap reached");
}

/// Golden-section minimization of phi(z) = eta (z log z - c z) + z log(z/x) - z + x
/// over [1e-12, B], B doubled until phi'(B) > 0. Golden section alone
/// stalls near sqrt(machine epsilon) because phi is flat at its minimum,
/// so the bracket it leaves is finished by bisection on the sign of
/// phi'(z) = eta (log z + 1 - c) + log(z/x).
inline double prox_1d_numeric(double x, double c, double eta) {
    if (!(x > 0.0) || !std::isfinite(x) || !std::isfinite(c) || !(eta >= 0.0)) {
        throw DomainError("prox_1d_numeric: invalid input");
    }
    const auto phi = [&](double z) {
        return eta * (z * std::log(z) - c * z) + z * std::log(z / x) - z + x;
    };
    const auto dphi = [&](double z) { return eta * (std::log(z) + 1.0 - c) + std::log(z / x); };

    double lo = 1e-12;
    double hi = std::max(1.0, x);
    for (int k = 0; dphi(hi) <= 0.0; ++k) {
        if (k > 2000 || !std::isfinite(hi)) throw ConvergenceError("prox_1d_numeric: bracket");
        hi *= 2.0;
    }
    if (dphi(lo) >= 0.0) return lo;

    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double c1 = b - kInvPhi * (b - a);
    double c2 = a + kInvPhi * (b - a);
    double f1 = phi(c1);
    double f2 = phi(c2);
    for (int it = 0; it < 200 && (b - a) > 1e-6 * std::max(1.0, b); ++it) {
        if (f1 < f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - kInvPhi * (b - a);
            f1 = phi(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + kInvPhi * (b - a);
            f2 = phi(c2);
        }
    }
    // Widen slightly so the minimizer is inside, then bisect on phi'.
    a = std::max(lo, a - (b - a));
    b = std::min(hi, b + (b - a));
    if (dphi(a) > 0.0) a = lo;
    if (dphi(b) < 0.0) b = hi;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        (dphi(mid) > 0.0 ? b : a) = mid;
    }
    return 0.5 * (a + b);
}

struct Symmetric2x2 {
    std::array<std::array<double, 2>, 2> plan;
    double cost;
};

/// Entropic plan for C = [[0,1],[1,0]], p = q = (1/2, 1/2): with k = exp(-1/gamma),
/// plan = [[1,k],[k,1]] / (2 (1 + k)) and cost = k / (1 + k).
inline Symmetric2x2 analytic_symmetric_2x2(double gamma) {
    if (!(gamma > 0.0)) throw DomainError("analytic_symmetric_2x2: gamma must be > 0");
    const double k = std::exp(-1.0 / gamma);
    const double diag = 1.0 / (2.0 * (1.0 + k));
    const double off = k / (2.0 * (1.0 + k));
    return {{{{diag, off}, {off, diag}}}, k / (1.0 + k)};
}

}  // namespace sinkmd::oracle
