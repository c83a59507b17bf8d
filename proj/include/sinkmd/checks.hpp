#pragma once

// Oracle-backed invariant suite run by `sinkmd check`. Every check draws its
// instances from a seeded generator and compares against an oracle at a
// fixed tolerance multiplied by `tolerance_scale`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sinkmd/kernel.hpp"
#include "sinkmd/oracle.hpp"
#include "sinkmd/otx.hpp"
#include "sinkmd/penalty.hpp"
#include "sinkmd/projection.hpp"
#include "sinkmd/random.hpp"
#include "sinkmd/solvers.hpp"

namespace sinkmd::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;
    double tolerance = 0.0;
};

struct CheckOptions {
    std::uint64_t seed = 1;
    double tolerance_scale = 1.0;
};

namespace detail {

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline CheckResult grad_check(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int s = 0; s < 5; ++s) {
        const auto system = random::block_system(rng, 8, 2, 3, s % 2 == 1);
        for (int t = 0; t < 10; ++t) {
            const auto x = random::positive_vector(rng, system.dimension(), 0.2, 5.0);
            for (std::size_t i = 0; i < system.num_constraints(); ++i) {
                std::vector<double> dense(system.dimension(), 0.0);
                for (const auto& e : grad_fi(system, i, x)) dense[e.index] = e.value;
                const auto fd = oracle::fd_gradient(
                    [&](std::span<const double> z) { return eval_fi(system, i, z); }, x);
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < dense.size(); ++j) {
                    num = std::max(num, std::abs(dense[j] - fd[j]));
                    den = std::max(den, std::abs(dense[j]));
                }
                worst = std::max(worst, num / std::max(den, 1e-3));
            }
        }
    }
    return {"gradient vs finite differences", worst <= tol, worst, tol};
}

inline CheckResult projection_feasibility(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 1 + t % 12;
        const auto x = random::positive_vector(rng, d);
        const auto h = random::binary_hyperplane(rng, d, random::uniform(rng, 0.1, 10.0));
        const auto z = project_binary(x, h);
        worst = std::max(worst, std::abs(h.dot(z.values()) - h.b()) / h.b());
        const auto zz = project_binary(z, h);
        for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, rel_err(zz[j], z[j]));
    }
    return {"binary projection feasibility and idempotence", worst <= tol, worst, tol};
}

inline CheckResult pythagoras(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 2 + t % 10;
        const auto x = random::positive_vector(rng, d);
        const auto h = random::binary_hyperplane(rng, d, random::uniform(rng, 0.1, 10.0));
        const auto w = random::positive_vector(rng, d);
        std::vector<double> feasible = w.vector();
        const double scale = h.b() / h.dot(w.values());
        for (double& v : feasible) v *= scale;
        const PositiveVector star(feasible);
        const auto proj = project_binary(x, h);
        const double lhs = kl_div(star, x);
        const double rhs = kl_div(star, proj) + kl_div(proj, x);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return {"Bregman Pythagoras on hyperplanes", worst <= tol, worst, tol};
}

inline CheckResult general_projection(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 1 + t % 10;
        const auto x = random::positive_vector(rng, d);
        const double b = random::uniform(rng, 0.1, 10.0);
        const auto h = random::general_hyperplane(rng, d, b);
        const auto z = project_general(x, h);
        worst = std::max(worst, std::abs(h.dot(z.values()) - b) / b);
        const auto hb = random::binary_hyperplane(rng, d, b);
        const auto zg = project_general(x, hb);
        const auto zb = project_binary(x, hb);
        for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, rel_err(zg[j], zb[j]));
    }
    return {"general projection residual and binary reduction", worst <= tol, worst, tol};
}

inline CheckResult sinkhorn_equivalence(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
        const auto problem = random::ot_problem(rng, 6, 1.0);
        SolverConfig cfg;
        cfg.tol = 1e-300;
        cfg.max_iter = 60;
        std::vector<Matrix> plans;
        sinkhorn(problem, cfg, [&](std::size_t, const Potentials& pot) {
            plans.push_back(plan_from_potentials(problem, pot).matrix());
        });
        const auto system = as_constraint_system(problem);
        const auto x0 = grad_conjugate(gibbs_kernel(problem).data());
        solve_smd(system, x0, cfg,
                  [&](std::size_t iter, std::span<const double> x, std::size_t) {
                      if (iter >= plans.size()) return;
                      const auto plan = plans[iter].data();
                      for (std::size_t k = 0; k < x.size(); ++k) {
                          worst = std::max(worst, std::abs(plan[k] - x[k]));
                      }
                  });
    }
    return {"Sinkhorn = cyclic stochastic mirror descent", worst <= tol, worst, tol};
}

inline CheckResult pinkhorn_descent(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
        const auto problem = random::ot_problem(rng, 8, t == 0 ? 0.1 : 1.0);
        SolverConfig cfg;
        cfg.method = Method::pinkhorn;
        cfg.max_iter = 500;
        cfg.full_trace = true;
        const auto report = pinkhorn(problem, cfg);
        for (std::size_t k = 1; k < report.trace.size(); ++k) {
            worst = std::max(worst, report.trace[k].objective - report.trace[k - 1].objective);
        }
    }
    return {"Pinkhorn objective non-increasing", worst <= tol, worst, tol};
}

inline CheckResult prox_vs_numeric(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const double x = random::uniform(rng, 0.1, 5.0);
        const double c = random::uniform(rng, -2.0, 2.0);
        const double eta = random::uniform(rng, 0.0, 4.0);
        const auto z = bregman_prox_entropy_linear(PositiveVector{x}, std::vector<double>{c}, eta);
        worst = std::max(worst, std::abs(z[0] - oracle::prox_1d_numeric(x, c, eta)));
    }
    return {"Bregman prox vs numeric minimization", worst <= tol, worst, tol};
}

inline CheckResult conjugate_roundtrip(random::Engine& rng, double tol) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto x = random::positive_vector(rng, 16, 1e-3, 1e3);
        const auto back = grad_conjugate(grad_mirror(x));
        for (std::size_t j = 0; j < x.size(); ++j) {
            worst = std::max(worst, std::abs(back[j] - x[j]) / x[j]);
        }
    }
    return {"conjugate roundtrip", worst <= tol, worst, tol};
}

}  // namespace detail

inline std::vector<CheckResult> run_invariant_suite(const CheckOptions& opts = {}) {
    random::Engine rng(opts.seed);
    const double s = opts.tolerance_scale;
    std::vector<CheckResult> out;
    out.push_back(detail::grad_check(rng, 1e-5 * s));
    out.push_back(detail::projection_feasibility(rng, 1e-12 * s));
    out.push_back(detail::pythagoras(rng, 1e-9 * s));
    out.push_back(detail::general_projection(rng, 1e-12 * s));
    out.push_back(detail::sinkhorn_equivalence(rng, 1e-10 * s));
    out.push_back(detail::pinkhorn_descent(rng, 1e-12 * s));
    out.push_back(detail::prox_vs_numeric(rng, 1e-8 * s));
    out.push_back(detail::conjugate_roundtrip(rng, 1e-14 * s));
    return out;
}

}  // namespace sinkmd::checks
