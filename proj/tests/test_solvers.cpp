#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sinkmd/oracle.hpp"
#include "sinkmd/random.hpp"
#include "sinkmd/solvers.hpp"

namespace sinkmd {
namespace {

ConstraintSystem toy_system() {
    return ConstraintSystem(3, {Hyperplane::dense({1, 1, 0}, 2.0), Hyperplane::dense({0, 1, 1}, 2.0)});
}

OTProblem ones_2x2(PositiveVector p, PositiveVector q) {
    return OTProblem(Matrix(2, 2, 0.0), 1.0, std::move(p), std::move(q));
}

// C = ln 4 with gamma = 1 makes X0 = 1/4 everywhere, already feasible.
OTProblem feasible_kernel_2x2() {
    return OTProblem(Matrix(2, 2, std::log(4.0)), 1.0, PositiveVector{0.5, 0.5},
                     PositiveVector{0.5, 0.5});
}

SolverConfig capped(std::size_t iters, Method m = Method::sinkhorn) {
    SolverConfig cfg;
    cfg.method = m;
    cfg.max_iter = iters;
    cfg.tol = 1e-300;
    return cfg;
}

TEST(StopCheck, Decisions) {
    SolverConfig cfg;
    cfg.tol = 1e-6;
    cfg.max_iter = 10;
    EXPECT_TRUE(stop_check(TraceEntry{3, 0.0, 0.0, 0.0}, cfg).stop);
    const auto half = stop_check(TraceEntry{3, 0.0, 5e-7, 0.0}, cfg);
    EXPECT_TRUE(half.stop);
    EXPECT_EQ(half.reason, StopReason::converged);
    EXPECT_FALSE(stop_check(TraceEntry{3, 0.0, 2e-6, 0.0}, cfg).stop);
    const auto cap = stop_check(TraceEntry{10, 0.0, 2e-6, 0.0}, cfg);
    EXPECT_TRUE(cap.stop);
    EXPECT_EQ(cap.reason, StopReason::max_iter);
    EXPECT_EQ(stop_check(TraceEntry{1, NAN, 1.0, 0.0}, cfg).reason, StopReason::numeric_failure);
}

TEST(SolverConfig, Validation) {
    SolverConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg.tol = 1e-8;
    cfg.max_iter = 0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg.max_iter = 1;
    cfg.eta = -1.0;
    EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(SmdStep, UnitStepIsBinaryProjection) {
    const ConstraintSystem s(3, {Hyperplane::dense({1, 1, 0}, 2.0)});
    const PositiveVector x{1, 3, 5};
    const auto z = smd_step(s, x, 0, 1.0);
    EXPECT_EQ(z, project_binary(x, s.row(0)));
    EXPECT_DOUBLE_EQ(z[0], 0.5);
    EXPECT_EQ(smd_step(s, x, 0, 0.0), x);
}

TEST(SmdStep, HalfStepMatchesMirrorFormula) {
    const ConstraintSystem s(3, {Hyperplane::dense({1, 1, 0}, 2.0)});
    const PositiveVector x{1, 3, 5};
    const auto z = smd_step(s, x, 0, 0.5);
    EXPECT_NEAR(z[0], 0.70710678118654752, 1e-15);
    EXPECT_NEAR(z[1], 2.1213203435596426, 1e-15);
    EXPECT_EQ(z[2], 5.0);
    // Independent route: grad_conjugate(grad_mirror(x) - eta grad f).
    auto g = grad_mirror(x);
    for (const auto& e : grad_fi(s, 0, x)) g[e.index] -= 0.5 * e.value;
    const auto via_conjugate = grad_conjugate(g);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(z[j], via_conjugate[j], 1e-14 * z[j]);
}

TEST(SolveSmd, FeasibleStartConvergesImmediately) {
    const auto r = solve_smd(toy_system(), PositiveVector{0.5, 1.5, 0.5}, SolverConfig{});
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(r.stop_reason, StopReason::converged);
    ASSERT_EQ(r.trace.size(), 1u);
}

TEST(SolveSmd, CyclicHandIteratedSteps) {
    std::vector<std::vector<double>> iterates;
    solve_smd(toy_system(), PositiveVector{1, 3, 5}, capped(2, Method::smd),
              [&](std::size_t, std::span<const double> x, std::size_t) {
                  iterates.emplace_back(x.begin(), x.end());
              });
    ASSERT_EQ(iterates.size(), 3u);
    EXPECT_DOUBLE_EQ(iterates[1][0], 0.5);
    EXPECT_DOUBLE_EQ(iterates[1][1], 1.5);
    EXPECT_DOUBLE_EQ(iterates[1][2], 5.0);
    EXPECT_DOUBLE_EQ(iterates[2][0], 0.5);
    EXPECT_NEAR(iterates[2][1], 0.46153846153846154, 1e-15);
    EXPECT_NEAR(iterates[2][2], 1.5384615384615385, 1e-15);
}

TEST(SolveSmd, ConvergesToReferenceSolution) {
    SolverConfig cfg;
    cfg.tol = 1e-12;
    const auto r = solve_smd(toy_system(), PositiveVector{1, 3, 5}, cfg);
    ASSERT_EQ(r.stop_reason, StopReason::converged);
    const auto ref = oracle::reference_solve(toy_system(), PositiveVector{1, 3, 5});
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r.solution[j], ref[j], 1e-10);
}

TEST(SolveSmd, UniformSamplingIsDeterministicPerSeed) {
    random::Engine rng(2);
    const auto system = random::block_system(rng, 20, 4, 4);
    SolverConfig cfg;
    cfg.sampling = Sampling::uniform;
    cfg.seed = 99;
    cfg.tol = 1e-10;
    const auto a = solve_smd(system, PositiveVector(std::vector<double>(20, 1.0)), cfg);
    const auto b = solve_smd(system, PositiveVector(std::vector<double>(20, 1.0)), cfg);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) {
        EXPECT_EQ(a.trace[k].iter, b.trace[k].iter);
        EXPECT_EQ(a.trace[k].objective, b.trace[k].objective);
        EXPECT_EQ(a.trace[k].violation_l1, b.trace[k].violation_l1);
    }
    EXPECT_EQ(a.solution, b.solution);
    cfg.seed = 100;
    const auto c = solve_smd(system, PositiveVector(std::vector<double>(20, 1.0)), cfg);
    EXPECT_EQ(c.stop_reason, StopReason::converged);
}

TEST(SolveSmd, GreedyPicksLargestBlockViolation) {
    random::Engine rng(6);
    const auto system = random::block_system(rng, 30, 5, 3);
    SolverConfig cfg;
    cfg.sampling = Sampling::greedy;
    cfg.tol = 1e-9;
    std::vector<double> prev(30, 1.0);
    const auto r = solve_smd(system, PositiveVector(prev), cfg,
                             [&](std::size_t iter, std::span<const double> x, std::size_t block) {
                                 if (iter > 0) {
                                     std::vector<double> kl(system.num_blocks(), 0.0);
                                     const auto res = eval_f(system, prev);
                                     for (std::size_t i = 0; i < res.per_constraint_kl.size(); ++i) {
                                         kl[system.block_of(i)] += res.per_constraint_kl[i];
                                     }
                                     for (std::size_t k = 0; k < kl.size(); ++k) {
                                         if (k < block) EXPECT_LT(kl[k], kl[block]);
                                         else EXPECT_LE(kl[k], kl[block]);
                                     }
                                 }
                                 prev.assign(x.begin(), x.end());
                             });
    EXPECT_EQ(r.stop_reason, StopReason::converged);
}

TEST(SolveSmd, GeneralRowsUseInverseSmoothnessStep) {
    random::Engine rng(13);
    const auto system = random::block_system(rng, 12, 3, 3, /*general=*/true);
    SolverConfig cfg;
    cfg.tol = 1e-9;
    const auto r = solve_smd(system, PositiveVector(std::vector<double>(12, 1.0)), cfg);
    EXPECT_EQ(r.stop_reason, StopReason::converged);
    EXPECT_LE(l1_violation(system, r.solution), 1e-9);
}

TEST(SolveSmd, HitsIterationCap) {
    const auto r = solve_smd(toy_system(), PositiveVector{1, 3, 5}, capped(3, Method::smd));
    EXPECT_EQ(r.stop_reason, StopReason::max_iter);
    EXPECT_EQ(r.iterations, 3u);
    EXPECT_LE(r.trace.size(), 4u);
}

TEST(SolveSmd, NumericFailureKeepsLastValidIterate) {
    // A huge stepsize drives entries to overflow.
    SolverConfig cfg = capped(50, Method::smd);
    cfg.eta = 1e6;
    const auto r = solve_smd(toy_system(), PositiveVector{1e-3, 1e-3, 1e-3}, cfg);
    EXPECT_EQ(r.stop_reason, StopReason::numeric_failure);
    for (double v : r.solution) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GT(v, 0.0);
    }
}

TEST(Sinkhorn, UniformConvergesInOneSweep) {
    const auto r = sinkhorn(ones_2x2({0.5, 0.5}, {0.5, 0.5}), SolverConfig{});
    EXPECT_EQ(r.stop_reason, StopReason::converged);
    EXPECT_LE(r.iterations, 2u);
    for (double v : r.solution.plan.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Sinkhorn, FirstUpdate) {
    std::vector<Potentials> seen;
    sinkhorn(ones_2x2({0.75, 0.25}, {0.5, 0.5}), capped(1),
             [&](std::size_t, const Potentials& p) { seen.push_back(p); });
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_NEAR(seen[1].u[0], -0.98082925301172624, 1e-15);
    EXPECT_NEAR(seen[1].u[1], -2.0794415416798359, 1e-15);
    EXPECT_EQ(seen[1].v[0], 0.0);
}

TEST(Sinkhorn, SingleEntryProblem) {
    const OTProblem p(Matrix(1, 1, 0.3), 0.7, PositiveVector{1.0}, PositiveVector{1.0});
    const auto r = sinkhorn(p, SolverConfig{});
    EXPECT_EQ(r.stop_reason, StopReason::converged);
    EXPECT_NEAR(r.solution.plan(0, 0), 1.0, 1e-15);
}

TEST(Sinkhorn, RowMarginalsExactAfterRowUpdate) {
    random::Engine rng(23);
    for (int t = 0; t < 10; ++t) {
        const auto problem = random::ot_problem(rng, 7, 0.3);
        sinkhorn(problem, capped(21), [&](std::size_t iter, const Potentials& pot) {
            if (iter % 2 == 1) {
                const auto r = row_sums(plan_from_potentials(problem, pot).matrix());
                for (std::size_t i = 0; i < r.size(); ++i) {
                    EXPECT_NEAR(r[i], problem.p()[i], 1e-12 * problem.p()[i]);
                }
            }
        });
    }
}

TEST(Sinkhorn, MatchesCyclicSmdTrajectory) {
    random::Engine rng(31);
    for (int t = 0; t < 5; ++t) {
        const auto problem = random::ot_problem(rng, 6, 1.0);
        std::vector<Matrix> plans;
        sinkhorn(problem, capped(100), [&](std::size_t, const Potentials& pot) {
            plans.push_back(plan_from_potentials(problem, pot).matrix());
        });
        const auto system = as_constraint_system(problem);
        std::size_t compared = 0;
        solve_smd(system, grad_conjugate(gibbs_kernel(problem).data()), capped(100, Method::smd),
                  [&](std::size_t iter, std::span<const double> x, std::size_t) {
                      for (std::size_t k = 0; k < x.size(); ++k) {
                          EXPECT_NEAR(plans[iter].data()[k], x[k], 1e-10);
                      }
                      ++compared;
                  });
        EXPECT_EQ(compared, 101u);
    }
}

TEST(Sinkhorn, FejerMonotoneTowardsReference) {
    random::Engine rng(41);
    for (int t = 0; t < 5; ++t) {
        const auto problem = random::ot_problem(rng, 5, 0.5);
        const auto system = as_constraint_system(problem);
        const auto x0 = grad_conjugate(gibbs_kernel(problem).data());
        oracle::OracleConfig ocfg;
        ocfg.ref_tol = 1e-14;
        const auto star = oracle::reference_solve(system, x0, ocfg);
        double last = kl_div(star, x0);
        sinkhorn(problem, capped(200), [&](std::size_t iter, const Potentials& pot) {
            if (iter == 0) return;
            const auto x = plan_from_potentials(problem, pot).vec();
            const double d = kl_div(star, x);
            EXPECT_LE(d, last + 1e-10);
            last = d;
        });
    }
}

TEST(Greenkhorn, SelectsLargestViolation) {
    std::vector<double> first;
    std::size_t selected = 99;
    greenkhorn(ones_2x2({0.75, 0.25}, {0.5, 0.5}), capped(1),
               [&](std::size_t, std::size_t sel, std::span<const double> kl) {
                   first.assign(kl.begin(), kl.end());
                   selected = sel;
               });
    ASSERT_EQ(first.size(), 4u);
    EXPECT_NEAR(first[0], 0.71165850602345247, 1e-14);
    EXPECT_NEAR(first[1], 2.4088830833596719, 1e-14);
    EXPECT_NEAR(first[2], 1.2725887222397812, 1e-14);
    EXPECT_NEAR(first[3], 1.2725887222397812, 1e-14);
    EXPECT_EQ(selected, 1u);
}

TEST(Greenkhorn, UpdatedRowBecomesFeasible) {
    std::vector<std::vector<double>> seen;
    greenkhorn(ones_2x2({0.75, 0.25}, {0.5, 0.5}), capped(2),
               [&](std::size_t, std::size_t, std::span<const double> kl) {
                   seen.emplace_back(kl.begin(), kl.end());
               });
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_LE(seen[1][1], 1e-15);
}

TEST(Greenkhorn, AlreadyFeasibleStopsImmediately) {
    const auto r = greenkhorn(feasible_kernel_2x2(), SolverConfig{});
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(r.stop_reason, StopReason::converged);
}

TEST(Greenkhorn, ArgmaxInvariantAndConvergence) {
    random::Engine rng(43);
    const auto problem = random::ot_problem(rng, 8, 0.5);
    SolverConfig cfg;
    const auto r = greenkhorn(problem, cfg, [&](std::size_t, std::size_t sel, std::span<const double> kl) {
        for (std::size_t k = 0; k < kl.size(); ++k) {
            if (k < sel) EXPECT_LT(kl[k], kl[sel]);
            else EXPECT_LE(kl[k], kl[sel]);
        }
    });
    EXPECT_EQ(r.stop_reason, StopReason::converged);
    EXPECT_LE(marginal_violation(problem, r.solution.plan), 1e-8);
}

TEST(Pinkhorn, FirstStep) {
    SolverConfig cfg = capped(1, Method::pinkhorn);
    cfg.eta = 0.5;
    const auto r = pinkhorn(ones_2x2({0.75, 0.25}, {0.5, 0.5}), cfg);
    const auto& x = r.solution.plan;
    EXPECT_NEAR(x(0, 0), 0.30618621784789726, 1e-15);
    EXPECT_NEAR(x(0, 1), 0.30618621784789726, 1e-15);
    EXPECT_NEAR(x(1, 0), 0.17677669529663688, 1e-15);
    EXPECT_NEAR(x(1, 1), 0.17677669529663688, 1e-15);
}

TEST(Pinkhorn, FirstStepMatchesFullGradientMirrorStep) {
    random::Engine rng(47);
    const auto problem = random::ot_problem(rng, 4, 0.7);
    const auto r = pinkhorn(problem, capped(1, Method::pinkhorn));
    const auto system = as_constraint_system(problem);
    const auto x0 = grad_conjugate(gibbs_kernel(problem).data());
    auto g = grad_mirror(x0);
    const auto grad = grad_f(system, x0.values());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] -= 0.5 * grad[k];
    const auto expected = grad_conjugate(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_NEAR(r.solution.plan.data()[k], expected[k], 1e-14 * expected[k]);
    }
}

TEST(Pinkhorn, FixedPointAndZeroStep) {
    const auto fixed = pinkhorn(feasible_kernel_2x2(), SolverConfig{});
    EXPECT_EQ(fixed.iterations, 0u);
    for (double v : fixed.solution.plan.data()) EXPECT_NEAR(v, 0.25, 1e-15);

    SolverConfig zero = capped(3, Method::pinkhorn);
    zero.eta = 0.0;
    const auto z = pinkhorn(ones_2x2({0.75, 0.25}, {0.5, 0.5}), zero);
    for (double v : z.solution.plan.data()) EXPECT_EQ(v, 1.0);
}

TEST(Pinkhorn, ObjectiveNonIncreasing) {
    random::Engine rng(53);
    for (int t = 0; t < 6; ++t) {
        const auto problem = random::ot_problem(rng, 6 + t, t % 2 ? 1.0 : 0.1);
        SolverConfig cfg;
        cfg.method = Method::pinkhorn;
        cfg.full_trace = true;
        const auto r = pinkhorn(problem, cfg);
        EXPECT_EQ(r.stop_reason, StopReason::converged);
        for (std::size_t k = 1; k < r.trace.size(); ++k) {
            EXPECT_LE(r.trace[k].objective, r.trace[k - 1].objective + 1e-12);
        }
    }
}

TEST(AccPinkhorn, FeasibleStart) {
    const auto r = acc_pinkhorn(feasible_kernel_2x2(), SolverConfig{});
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(r.stop_reason, StopReason::converged);
}

TEST(AccPinkhorn, ConvergesWithMonotoneObjective) {
    random::Engine rng(59);
    for (int t = 0; t < 6; ++t) {
        const auto problem = random::ot_problem(rng, 5 + 3 * t, t % 2 ? 1.0 : 0.1);
        SolverConfig cfg;
        cfg.method = Method::acc_pinkhorn;
        cfg.full_trace = true;
        const auto r = acc_pinkhorn(problem, cfg);
        ASSERT_EQ(r.stop_reason, StopReason::converged);
        EXPECT_LE(r.trace.back().objective, cfg.tol);
        for (std::size_t k = 1; k < r.trace.size(); ++k) {
            EXPECT_LE(r.trace[k].objective, r.trace[k - 1].objective + 1e-12);
        }
        // Agrees with Sinkhorn's plan.
        const auto s = sinkhorn(problem, SolverConfig{});
        for (std::size_t k = 0; k < r.solution.plan.size(); ++k) {
            EXPECT_NEAR(r.solution.plan.data()[k], s.solution.plan.data()[k], 1e-6);
        }
    }
}

TEST(AccPinkhorn, SmallGammaStaysInLogDomain) {
    random::Engine rng(63);
    const auto problem = random::ot_problem(rng, 10, 0.01);
    SolverConfig cfg;
    cfg.method = Method::acc_pinkhorn;
    const auto r = acc_pinkhorn(problem, cfg);
    ASSERT_EQ(r.stop_reason, StopReason::converged);
    ASSERT_TRUE(r.solution.potentials.has_value());
    const auto s = sinkhorn(problem, SolverConfig{});
    for (std::size_t k = 0; k < r.solution.plan.size(); ++k) {
        EXPECT_NEAR(r.solution.plan.data()[k], s.solution.plan.data()[k], 1e-6);
    }
}

TEST(Solve, DispatchesAllMethodsToTheSamePlan) {
    random::Engine rng(61);
    const auto problem = random::ot_problem(rng, 5, 0.5);
    SolverConfig cfg;
    cfg.tol = 1e-10;
    const auto ref = sinkhorn(problem, cfg).solution.plan;
    for (Method m : {Method::greenkhorn, Method::pinkhorn, Method::acc_pinkhorn, Method::smd}) {
        cfg.method = m;
        const auto r = solve(problem, cfg);
        ASSERT_EQ(r.stop_reason, StopReason::converged) << to_string(m);
        for (std::size_t k = 0; k < ref.size(); ++k) {
            EXPECT_NEAR(r.solution.plan.data()[k], ref.data()[k], 1e-8) << to_string(m);
        }
    }
}

TEST(Trace, CadenceAndBound) {
    random::Engine rng(67);
    const auto problem = random::ot_problem(rng, 5, 1.0);
    SolverConfig cfg = capped(2345);
    const auto r = sinkhorn(problem, cfg);
    EXPECT_EQ(r.iterations, 2345u);
    EXPECT_LE(r.trace.size(), cfg.max_iter + 1);
    // 0..1000, then 1010..2340 every 10th, then the final entry.
    EXPECT_EQ(r.trace.size(), 1001u + 134u + 1u);
    EXPECT_EQ(r.trace.back().iter, 2345u);
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
        EXPECT_GT(r.trace[k].iter, r.trace[k - 1].iter);
        EXPECT_GE(r.trace[k].objective, 0.0);
    }
}

TEST(Trace, DeterministicAcrossRuns) {
    random::Engine rng(71);
    const auto problem = random::ot_problem(rng, 6, 0.2);
    for (Method m : {Method::sinkhorn, Method::greenkhorn, Method::pinkhorn, Method::acc_pinkhorn}) {
        SolverConfig cfg;
        cfg.method = m;
        const auto a = solve(problem, cfg);
        const auto b = solve(problem, cfg);
        ASSERT_EQ(a.trace.size(), b.trace.size());
        for (std::size_t k = 0; k < a.trace.size(); ++k) {
            EXPECT_EQ(a.trace[k].objective, b.trace[k].objective);
            EXPECT_EQ(a.trace[k].violation_l1, b.trace[k].violation_l1);
        }
        EXPECT_EQ(a.solution.plan, b.solution.plan);
    }
}

}  // namespace
}  // namespace sinkmd
