#pragma once

// Seeded instance generators shared by the benchmark, the check command and
// the test suites.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include "sinkmd/kernel.hpp"
#include "sinkmd/otx.hpp"
#include "sinkmd/penalty.hpp"
#include "sinkmd/projection.hpp"

namespace sinkmd::random {

using Engine = std::mt19937_64;

inline double uniform(Engine& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline PositiveVector positive_vector(Engine& rng, std::size_t n, double lo = 0.1,
                                      double hi = 10.0) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(rng, lo, hi);
    return PositiveVector(std::move(v));
}

/// Entries uniform [0.5, 1.5), normalized to sum 1.
inline PositiveVector marginal(Engine& rng, std::size_t n) {
    std::vector<double> w(n);
    for (double& x : w) x = uniform(rng, 0.5, 1.5);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return PositiveVector(std::move(w));
}

/// Cost uniform [0, 1) and marginals from `marginal`.
inline OTProblem ot_problem(Engine& rng, std::size_t n, double gamma) {
    Matrix cost(n, n);
    for (double& c : cost.data()) c = uniform(rng, 0.0, 1.0);
    auto p = marginal(rng, n);
    auto q = marginal(rng, n);
    return OTProblem(std::move(cost), gamma, std::move(p), std::move(q));
}

/// 0/1 row over `dim` variables with a random nonempty support.
inline Hyperplane binary_hyperplane(Engine& rng, std::size_t dim, double b) {
    std::vector<std::size_t> idx;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t j = 0; j < dim; ++j) {
        if (coin(rng)) idx.push_back(j);
    }
    if (idx.empty()) idx.push_back(std::uniform_int_distribution<std::size_t>(0, dim - 1)(rng));
    return Hyperplane::indicator(idx, b);
}

/// Nonnegative row with entries in [lo, hi) on a random nonempty support.
inline Hyperplane general_hyperplane(Engine& rng, std::size_t dim, double b, double lo = 0.1,
                                     double hi = 3.0) {
    std::vector<SparseEntry> entries;
    std::bernoulli_distribution coin(0.6);
    for (std::size_t j = 0; j < dim; ++j) {
        if (coin(rng)) entries.push_back({j, uniform(rng, lo, hi)});
    }
    if (entries.empty()) {
        entries.push_back(
            {std::uniform_int_distribution<std::size_t>(0, dim - 1)(rng), uniform(rng, lo, hi)});
    }
    return Hyperplane(std::move(entries), b);
}

/// Feasible system with `blocks` blocks over `dim` variables; each block
/// partitions a random permutation of the variables into disjoint binary
/// rows. Targets come from a hidden positive x* so that Ax* = b.
inline ConstraintSystem block_system(Engine& rng, std::size_t dim, std::size_t blocks,
                                     std::size_t rows_per_block, bool general = false) {
    std::vector<double> hidden(dim);
    for (double& x : hidden) x = uniform(rng, 0.2, 2.0);
    std::vector<Hyperplane> rows;
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> perm(dim);
    for (std::size_t k = 0; k < blocks; ++k) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::size_t> group;
        const std::size_t per = std::max<std::size_t>(1, dim / rows_per_block);
        for (std::size_t start = 0; start < dim && group.size() < rows_per_block; start += per) {
            const std::size_t stop =
                group.size() + 1 == rows_per_block ? dim : std::min(dim, start + per);
            std::vector<SparseEntry> entries;
            double b = 0.0;
            for (std::size_t t = start; t < stop; ++t) {
                const double a = general ? uniform(rng, 0.5, 2.0) : 1.0;
                entries.push_back({perm[t], a});
                b += a * hidden[perm[t]];
            }
            group.push_back(rows.size());
            rows.emplace_back(std::move(entries), b);
            if (stop == dim) break;
        }
        groups.push_back(std::move(group));
    }
    return ConstraintSystem(dim, std::move(rows), std::move(groups));
}

}  // namespace sinkmd::random
