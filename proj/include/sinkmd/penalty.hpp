#pragma once

// KL penalty objective f(x) = KL(Ax || b) = sum_i f_i(x) with
// f_i(x) = <a_i,x> log(<a_i,x>/b_i) - <a_i,x> + b_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sinkmd/errors.hpp"
#include "sinkmd/kernel.hpp"
#include "sinkmd/projection.hpp"

namespace sinkmd {

/// Rows a_i >= 0 and targets b_i > 0 over `dimension` variables, grouped into
/// blocks whose rows have pairwise disjoint supports.
class ConstraintSystem {
public:
    /// Every row in its own block.
    ConstraintSystem(std::size_t dimension, std::vector<Hyperplane> rows)
        : ConstraintSystem(dimension, std::move(rows), {}) {}

    /// An empty `blocks` means one block per row.
    ConstraintSystem(std::size_t dimension, std::vector<Hyperplane> rows,
                     std::vector<std::vector<std::size_t>> blocks)
        : dimension_(dimension), rows_(std::move(rows)), blocks_(std::move(blocks)) {
        if (dimension_ == 0) {
            throw DomainError("ConstraintSystem: dimension must be positive");
        }
        if (rows_.empty()) {
            throw DomainError("ConstraintSystem: no constraints");
        }
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (rows_[i].max_index() >= dimension_) {
                throw DimensionError("ConstraintSystem: row " + std::to_string(i) +
                                     " references index " +
                                     std::to_string(rows_[i].max_index()) +
                                     " >= dimension " + std::to_string(dimension_));
            }
        }
        if (blocks_.empty()) {
            blocks_.reserve(rows_.size());
            for (std::size_t i = 0; i < rows_.size(); ++i) blocks_.push_back({i});
        }
        validate_blocks();
        block_of_.assign(rows_.size(), 0);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            for (std::size_t i : blocks_[k]) block_of_[i] = k;
        }
    }

    /// Dense A (row-major, rows x dimension) and b.
    static ConstraintSystem from_dense(const Matrix& a, std::span<const double> b,
                                       std::vector<std::vector<std::size_t>> blocks = {}) {
        detail::require_same_size(a.rows(), b.size(), "ConstraintSystem::from_dense");
        std::vector<Hyperplane> rows;
        rows.reserve(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) {
            try {
                rows.push_back(Hyperplane::dense(a.row(i), b[i]));
            } catch (const DomainError& e) {
                throw DomainError("constraint " + std::to_string(i) + ": " + e.what());
            }
        }
        return ConstraintSystem(a.cols(), std::move(rows), std::move(blocks));
    }

    struct Triplet {
        std::size_t row;
        std::size_t col;
        double value;
    };

    /// Sparse (row, col, value) triplets; the number of rows is b.size() and
    /// the dimension is `dimension` or, if zero, 1 + the largest column seen.
    static ConstraintSystem from_triplets(std::span<const Triplet> triplets,
                                          std::span<const double> b, std::size_t dimension = 0,
                                          std::vector<std::vector<std::size_t>> blocks = {}) {
        std::vector<std::vector<SparseEntry>> entries(b.size());
        std::size_t max_col = 0;
        for (const auto& t : triplets) {
            if (t.row >= b.size()) {
                throw DimensionError("ConstraintSystem::from_triplets: row " +
                                     std::to_string(t.row) + " has no target b");
            }
            entries[t.row].push_back({t.col, t.value});
            max_col = std::max(max_col, t.col);
        }
        if (dimension == 0) dimension = max_col + 1;
        std::vector<Hyperplane> rows;
        rows.reserve(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            try {
                rows.emplace_back(std::move(entries[i]), b[i]);
            } catch (const DomainError& e) {
                throw DomainError("constraint " + std::to_string(i) + ": " + e.what());
            }
        }
        return ConstraintSystem(dimension, std::move(rows), std::move(blocks));
    }

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t num_constraints() const noexcept { return rows_.size(); }
    std::size_t num_blocks() const noexcept { return blocks_.size(); }
    const Hyperplane& row(std::size_t i) const { return rows_.at(i); }
    std::span<const Hyperplane> rows() const noexcept { return rows_; }
    std::span<const std::size_t> block(std::size_t k) const { return blocks_.at(k); }
    const std::vector<std::vector<std::size_t>>& blocks() const noexcept { return blocks_; }
    std::size_t block_of(std::size_t i) const { return block_of_.at(i); }

private:
    void validate_blocks() const {
        std::vector<int> seen(rows_.size(), 0);
        std::vector<std::size_t> owner(dimension_, 0);
        std::vector<std::size_t> stamp(dimension_, 0);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            if (blocks_[k].empty()) {
                throw DomainError("ConstraintSystem: block " + std::to_string(k) + " is empty");
            }
            for (std::size_t i : blocks_[k]) {
                if (i >= rows_.size()) {
                    throw DimensionError("ConstraintSystem: block " + std::to_string(k) +
                                         " references unknown constraint " + std::to_string(i));
                }
                if (seen[i]++) {
                    throw DomainError("ConstraintSystem: constraint " + std::to_string(i) +
                                      " appears in more than one block");
                }
                for (const auto& e : rows_[i].entries()) {
                    if (stamp[e.index] == k + 1) {
                        throw DomainError("ConstraintSystem: constraints " +
                                          std::to_string(owner[e.index]) + " and " +
                                          std::to_string(i) + " in block " + std::to_string(k) +
                                          " share variable " + std::to_string(e.index));
                    }
                    stamp[e.index] = k + 1;
                    owner[e.index] = i;
                }
            }
        }
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (!seen[i]) {
                throw DomainError("ConstraintSystem: constraint " + std::to_string(i) +
                                  " is not assigned to a block");
            }
        }
    }

    std::size_t dimension_;
    std::vector<Hyperplane> rows_;
    std::vector<std::vector<std::size_t>> blocks_;
    std::vector<std::size_t> block_of_;
};

struct Residual {
    std::vector<double> per_constraint_kl;
    double l1_violation = 0.0;
    double objective = 0.0;
};

namespace detail {

/// KL(s || b) for scalars, clamped at 0 against rounding.
inline double scalar_kl(double s, double b) {
    return kl_term(s, b);
}

inline double constraint_dot(const ConstraintSystem& system, std::size_t i,
                             std::span<const double> x) {
    detail::require_same_size(x.size(), system.dimension(), "penalty");
    return detail::checked_dot(system.row(i), x, "penalty");
}

}  // namespace detail

inline double eval_fi(const ConstraintSystem& system, std::size_t i, std::span<const double> x) {
    return detail::scalar_kl(detail::constraint_dot(system, i, x), system.row(i).b());
}

inline double eval_fi(const ConstraintSystem& system, std::size_t i, const PositiveVector& x) {
    return eval_fi(system, i, x.values());
}

/// a_i log(<a_i,x>/b_i), supported on support(a_i).
inline std::vector<SparseEntry> grad_fi(const ConstraintSystem& system, std::size_t i,
                                        std::span<const double> x) {
    const auto& h = system.row(i);
    const double scale = std::log(detail::constraint_dot(system, i, x) / h.b());
    std::vector<SparseEntry> g;
    g.reserve(h.entries().size());
    for (const auto& e : h.entries()) g.push_back({e.index, e.value * scale});
    return g;
}

inline std::vector<SparseEntry> grad_fi(const ConstraintSystem& system, std::size_t i,
                                        const PositiveVector& x) {
    return grad_fi(system, i, x.values());
}

/// Dense gradient of f = sum_i f_i.
inline std::vector<double> grad_f(const ConstraintSystem& system, std::span<const double> x) {
    std::vector<double> g(system.dimension(), 0.0);
    for (std::size_t i = 0; i < system.num_constraints(); ++i) {
        for (const auto& e : grad_fi(system, i, x)) g[e.index] += e.value;
    }
    return g;
}

inline Residual eval_f(const ConstraintSystem& system, std::span<const double> x) {
    Residual r;
    r.per_constraint_kl.reserve(system.num_constraints());
    for (std::size_t i = 0; i < system.num_constraints(); ++i) {
        const double s = detail::constraint_dot(system, i, x);
        const double b = system.row(i).b();
        const double fi = detail::scalar_kl(s, b);
        r.per_constraint_kl.push_back(fi);
        r.objective += fi;
        r.l1_violation += std::abs(s - b);
    }
    return r;
}

inline Residual eval_f(const ConstraintSystem& system, const PositiveVector& x) {
    return eval_f(system, x.values());
}

inline double l1_violation(const ConstraintSystem& system, std::span<const double> x) {
    double v = 0.0;
    for (std::size_t i = 0; i < system.num_constraints(); ++i) {
        v += std::abs(detail::constraint_dot(system, i, x) - system.row(i).b());
    }
    return v;
}

/// Relative-smoothness constant of f_i w.r.t. the entropy map: the Hessian
/// a a^T / <a,x> is dominated by L diag(1/x) with L = max_j a_j (Cauchy-Schwarz),
/// which is 1 for binary rows.
inline double rel_smooth_constant(const ConstraintSystem& system, std::size_t i) {
    return system.row(i).max_coefficient();
}

/// Constant of a block. Disjoint supports make the block Hessian block-diagonal,
/// so the largest row constant suffices.
inline double block_smooth_constant(const ConstraintSystem& system, std::size_t k) {
    double l = 0.0;
    for (std::size_t i : system.block(k)) l = std::max(l, rel_smooth_constant(system, i));
    return l;
}

/// Constant of f = sum over blocks, used for full-gradient steps.
inline double total_smooth_constant(const ConstraintSystem& system) {
    double l = 0.0;
    for (std::size_t k = 0; k < system.num_blocks(); ++k) l += block_smooth_constant(system, k);
    return l;
}

}  // namespace sinkmd
