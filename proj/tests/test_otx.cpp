#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sinkmd/oracle.hpp"
#include "sinkmd/otx.hpp"
#include "sinkmd/random.hpp"

namespace sinkmd {
namespace {

OTProblem uniform_2x2(const Matrix& cost = Matrix(2, 2, 0.0), double gamma = 1.0) {
    return OTProblem(cost, gamma, PositiveVector{0.5, 0.5}, PositiveVector{0.5, 0.5});
}

TEST(OTProblem, Validation) {
    EXPECT_THROW(OTProblem(Matrix(2, 2), 0.0, PositiveVector{0.5, 0.5}, PositiveVector{0.5, 0.5}),
                 DomainError);
    EXPECT_THROW(OTProblem(Matrix(2, 2), 1.0, PositiveVector{0.5, 0.6}, PositiveVector{0.5, 0.5}),
                 DomainError);
    EXPECT_THROW(OTProblem(Matrix(3, 2), 1.0, PositiveVector{0.5, 0.5}, PositiveVector{0.5, 0.5}),
                 DimensionError);
    EXPECT_THROW(PositiveVector({0.0, 1.0}), DomainError);
    // Rectangular problems are fine.
    EXPECT_NO_THROW(OTProblem(Matrix(1, 2), 1.0, PositiveVector{1.0}, PositiveVector{0.25, 0.75}));
}

TEST(GibbsKernel, Values) {
    const auto zero = gibbs_kernel(uniform_2x2());
    for (double v : zero.data()) EXPECT_EQ(v, 0.0);

    const Matrix c{{0, 1}, {1, 0}};
    const auto k1 = gibbs_kernel(uniform_2x2(c, 1.0));
    EXPECT_NEAR(std::exp(k1(0, 1)), 0.36787944117144233, 1e-16);
    EXPECT_EQ(std::exp(k1(0, 0)), 1.0);
    const auto k2 = gibbs_kernel(uniform_2x2(c, 2.0));
    EXPECT_DOUBLE_EQ(k2(1, 0), 0.5 * k1(1, 0));
}

TEST(PlanFromPotentials, Values) {
    const auto problem = uniform_2x2();
    const auto x0 = plan_from_potentials(problem, {{0, 0}, {0, 0}});
    EXPECT_EQ(x0(1, 1), 1.0);

    const auto x = plan_from_potentials(problem, {{std::log(0.375), std::log(0.125)}, {0, 0}});
    EXPECT_NEAR(x(0, 0), 0.375, 1e-16);
    EXPECT_NEAR(x(0, 1), 0.375, 1e-16);
    EXPECT_NEAR(x(1, 0), 0.125, 1e-16);
    EXPECT_NEAR(x(1, 1), 0.125, 1e-16);
}

TEST(PlanFromPotentials, GaugeInvariance) {
    random::Engine rng(8);
    for (int t = 0; t < 20; ++t) {
        const auto problem = random::ot_problem(rng, 5, 0.5);
        Potentials pot{std::vector<double>(5), std::vector<double>(5)};
        for (double& v : pot.u) v = random::uniform(rng, -2, 2);
        for (double& v : pot.v) v = random::uniform(rng, -2, 2);
        const double c = random::uniform(rng, -5, 5);
        Potentials shifted = pot;
        for (double& v : shifted.u) v += c;
        for (double& v : shifted.v) v -= c;
        const auto a = plan_from_potentials(problem, pot);
        const auto b = plan_from_potentials(problem, shifted);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a(i, j), b(i, j), 1e-12 * a(i, j));
        }
    }
}

TEST(PlanFromPotentials, OverflowIsRangeError) {
    EXPECT_THROW(plan_from_potentials(uniform_2x2(), {{800, 0}, {0, 0}}), RangeError);
}

TEST(TransportCost, Values) {
    EXPECT_EQ(transport_cost(uniform_2x2(), Matrix(2, 2, 0.25)), 0.0);
    const Matrix c{{0, 1}, {1, 0}};
    EXPECT_EQ(transport_cost(uniform_2x2(c), Matrix{{0.5, 0}, {0, 0.5}}), 0.0);
    const auto exact = oracle::analytic_symmetric_2x2(0.5);
    const Matrix plan{{exact.plan[0][0], exact.plan[0][1]}, {exact.plan[1][0], exact.plan[1][1]}};
    EXPECT_NEAR(transport_cost(uniform_2x2(c, 0.5), plan), 0.1192029220221176, 1e-15);
    EXPECT_THROW(transport_cost(uniform_2x2(), Matrix(2, 3)), DimensionError);
}

TEST(OtObjective, Values) {
    const auto problem = uniform_2x2();
    EXPECT_EQ(ot_objective(problem, Matrix(2, 2, 0.25)), 0.0);
    // Four violated constraints, each KL(2 || 1/2) = 2 ln 4 - 3/2.
    EXPECT_NEAR(ot_objective(problem, Matrix(2, 2, 1.0)), 5.0903548889591250, 1e-14);
}

TEST(OtObjective, MatchesPenaltyOnEquivalentSystem) {
    random::Engine rng(12);
    for (int t = 0; t < 50; ++t) {
        const auto problem = random::ot_problem(rng, 1 + t % 6, 1.0);
        Matrix x(problem.rows(), problem.cols());
        for (double& v : x.data()) v = random::uniform(rng, 0.01, 1.0);
        const auto system = as_constraint_system(problem);
        const double direct = ot_objective(problem, x);
        const double penalty = eval_f(system, x.data()).objective;
        EXPECT_NEAR(direct, penalty, 1e-12 * std::max(1.0, penalty));
    }
}

TEST(AsConstraintSystem, Layout) {
    const auto one = as_constraint_system(
        OTProblem(Matrix(1, 1), 1.0, PositiveVector{1.0}, PositiveVector{1.0}));
    EXPECT_EQ(one.num_constraints(), 2u);
    EXPECT_EQ(one.row(0).b(), 1.0);
    EXPECT_EQ(one.row(1).entries().size(), 1u);

    const auto two = as_constraint_system(uniform_2x2());
    EXPECT_EQ(two.num_constraints(), 4u);
    EXPECT_EQ(two.num_blocks(), 2u);
    ASSERT_EQ(two.row(0).entries().size(), 2u);
    EXPECT_EQ(two.row(0).entries()[0].index, 0u);
    EXPECT_EQ(two.row(0).entries()[1].index, 1u);
    // First column constraint selects vec indices {0, 2}.
    EXPECT_EQ(two.row(2).entries()[1].index, 2u);
    EXPECT_TRUE(two.row(3).is_binary());
}

TEST(RoundToFeasible, Properties) {
    const auto problem = uniform_2x2();
    const Matrix feasible(2, 2, 0.25);
    const auto same = round_to_feasible(problem, feasible);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(same.data()[k], 0.25, 1e-12);

    const auto restored = round_to_feasible(problem, Matrix(2, 2, 0.125));
    EXPECT_LE(marginal_violation(problem, restored), 1e-12);

    random::Engine rng(19);
    for (int t = 0; t < 200; ++t) {
        const auto p = random::ot_problem(rng, 2 + t % 7, 1.0);
        Matrix x(p.rows(), p.cols());
        for (double& v : x.data()) v = random::uniform(rng, 1e-3, 1.0 / p.rows());
        const double before = marginal_violation(p, x);
        const auto y = round_to_feasible(p, x);
        EXPECT_LE(marginal_violation(p, y), 1e-12);
        for (double v : y.data()) EXPECT_GE(v, 0.0);
        double cmax = 0.0;
        for (double c : p.cost().data()) cmax = std::max(cmax, std::abs(c));
        EXPECT_LE(std::abs(transport_cost(p, y) - transport_cost(p, x)), cmax * before + 1e-12);
    }
}

}  // namespace
}  // namespace sinkmd
