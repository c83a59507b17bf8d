#pragma once

// Bregman (KL) projections onto hyperplanes {z : <a,z> = b} with a >= 0, and
// the entropy-Bregman prox of f(z) = <z, log z> - <c, z>.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sinkmd/errors.hpp"
#include "sinkmd/kernel.hpp"

namespace sinkmd {

struct SparseEntry {
    std::size_t index;
    double value;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse nonnegative row a with target b > 0. Entries are stored sorted by
/// index; explicit zeros are dropped.
class Hyperplane {
public:
    Hyperplane(std::vector<SparseEntry> entries, double b) : entries_(std::move(entries)), b_(b) {
        std::erase_if(entries_, [](const SparseEntry& e) { return e.value == 0.0; });
        std::sort(entries_.begin(), entries_.end(),
                  [](const SparseEntry& l, const SparseEntry& r) { return l.index < r.index; });
        if (entries_.empty()) {
            throw DomainError("Hyperplane: row has no nonzero entry");
        }
        if (!(b_ > 0.0) || !std::isfinite(b_)) {
            throw DomainError("Hyperplane: target b must be finite and > 0");
        }
        for (std::size_t k = 0; k < entries_.size(); ++k) {
            if (!(entries_[k].value > 0.0) || !std::isfinite(entries_[k].value)) {
                throw DomainError("Hyperplane: entry at index " +
                                  std::to_string(entries_[k].index) + " is negative or not finite");
            }
            if (k > 0 && entries_[k].index == entries_[k - 1].index) {
                throw DomainError("Hyperplane: duplicate index " +
                                  std::to_string(entries_[k].index));
            }
        }
        is_binary_ = std::all_of(entries_.begin(), entries_.end(),
                                 [](const SparseEntry& e) { return e.value == 1.0; });
    }

    static Hyperplane dense(std::span<const double> a, double b) {
        std::vector<SparseEntry> entries;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] != 0.0) {
                entries.push_back({j, a[j]});
            }
        }
        return Hyperplane(std::move(entries), b);
    }

    static Hyperplane dense(std::initializer_list<double> a, double b) {
        return dense(std::span<const double>(a.begin(), a.size()), b);
    }

    /// Binary row selecting `indices`.
    static Hyperplane indicator(std::span<const std::size_t> indices, double b) {
        std::vector<SparseEntry> entries;
        entries.reserve(indices.size());
        for (std::size_t j : indices) {
            entries.push_back({j, 1.0});
        }
        return Hyperplane(std::move(entries), b);
    }

    std::span<const SparseEntry> entries() const noexcept { return entries_; }
    double b() const noexcept { return b_; }
    bool is_binary() const noexcept { return is_binary_; }
    std::size_t max_index() const noexcept { return entries_.back().index; }
    double max_coefficient() const noexcept {
        double m = 0.0;
        for (const auto& e : entries_) m = std::max(m, e.value);
        return m;
    }
    double min_coefficient() const noexcept {
        double m = entries_.front().value;
        for (const auto& e : entries_) m = std::min(m, e.value);
        return m;
    }

    /// <a, x>. Caller guarantees max_index() < x.size().
    double dot(std::span<const double> x) const noexcept {
        double s = 0.0;
        for (const auto& e : entries_) s += e.value * x[e.index];
        return s;
    }

private:
    std::vector<SparseEntry> entries_;
    double b_;
    bool is_binary_ = false;
};

namespace detail {

inline double checked_dot(const Hyperplane& h, std::span<const double> x, const char* what) {
    if (h.max_index() >= x.size()) {
        throw DimensionError(std::string(what) + ": row index " + std::to_string(h.max_index()) +
                             " out of range for dimension " + std::to_string(x.size()));
    }
    const double s = h.dot(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw DomainError(std::string(what) + ": <a,x> must be finite and > 0");
    }
    return s;
}

/// In-place projection for binary rows; only the support is touched.
inline void project_binary_inplace(std::span<double> x, const Hyperplane& h) {
    const double ratio = h.b() / checked_dot(h, x, "project_binary");
    for (const auto& e : h.entries()) x[e.index] *= ratio;
}

}  // namespace detail

/// Closed-form KL projection for a 0/1 row: scales the support by b/<a,x>.
inline PositiveVector project_binary(const PositiveVector& x, const Hyperplane& h) {
    if (!h.is_binary()) {
        throw DomainError("project_binary: row is not binary");
    }
    std::vector<double> z = x.vector();
    detail::project_binary_inplace(z, h);
    return PositiveVector(std::move(z));
}

struct ProjectionOptions {
    double tol = 1e-12;
    int max_iter = 200;
};

/// Multiplier alpha with <a, x * exp(alpha a)> = b. The function
/// S(alpha) = sum a_j x_j exp(alpha a_j) is increasing and log-convex, and
/// S(0) exp(alpha a_min) / S(0) exp(alpha a_max) bound it on either side of
/// zero, so the root is bracketed by log(b/S(0)) / a_max and
/// log(b/S(0)) / a_min. Newton on log S(alpha) - log b, with bisection when
/// a step leaves the bracket.
inline double projection_multiplier(std::span<const double> x, const Hyperplane& h,
                                    ProjectionOptions opts = {}) {
    const double s0 = detail::checked_dot(h, x, "project_general");
    const double log_ratio = std::log(h.b() / s0);
    if (std::abs(s0 - h.b()) <= opts.tol * h.b() * 0.5) {
        return 0.0;
    }
    if (h.is_binary()) {
        return log_ratio;
    }
    const double a_max = h.max_coefficient();
    const double a_min = h.min_coefficient();
    double lo = std::min(log_ratio / a_max, log_ratio / a_min);
    double hi = std::max(log_ratio / a_max, log_ratio / a_min);
    const double pad = 1e-12 * std::max(1.0, std::abs(hi - lo));
    lo -= pad;
    hi += pad;

    // Returns (log S(alpha) - log b, d/dalpha log S(alpha), S(alpha)/b - 1).
    const auto eval = [&](double alpha) {
        double s = 0.0;
        double ds = 0.0;
        for (const auto& e : h.entries()) {
            const double t = e.value * x[e.index] * std::exp(alpha * e.value);
            s += t;
            ds += e.value * t;
        }
        struct Value {
            double g, dg, rel;
        };
        return Value{std::log(s / h.b()), ds / s, s / h.b() - 1.0};
    };

    double alpha = log_ratio / a_max;
    for (int it = 0; it < opts.max_iter; ++it) {
        const auto v = eval(alpha);
        if (!std::isfinite(v.g)) {
            throw ConvergenceError("project_general: non-finite residual");
        }
        if (std::abs(v.rel) <= opts.tol) {
            // One more Newton step is nearly free and usually lands on rounding level.
            const double polished = alpha - v.g / v.dg;
            return std::abs(eval(polished).rel) < std::abs(v.rel) ? polished : alpha;
        }
        if (v.g > 0.0) {
            hi = std::min(hi, alpha);
        } else {
            lo = std::max(lo, alpha);
        }
        double next = alpha - v.g / v.dg;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (next == alpha) {
            break;
        }
        alpha = next;
    }
    if (std::abs(eval(alpha).rel) <= opts.tol) {
        return alpha;
    }
    throw ConvergenceError("project_general: root finder did not converge (ill-conditioned row)");
}

/// KL projection onto a general nonnegative row: x * exp(alpha a).
inline PositiveVector project_general(const PositiveVector& x, const Hyperplane& h,
                                      ProjectionOptions opts = {}) {
    const double alpha = projection_multiplier(x.values(), h, opts);
    std::vector<double> z = x.vector();
    if (alpha != 0.0) {
        for (const auto& e : h.entries()) z[e.index] *= std::exp(alpha * e.value);
    }
    return PositiveVector(std::move(z));
}

/// argmin_z eta (<z, log z> - <c, z>) + KL(z || x). Stationarity gives
/// (1 + eta) log z = log x + eta (c - 1).
inline PositiveVector bregman_prox_entropy_linear(const PositiveVector& x,
                                                  std::span<const double> c, double eta) {
    detail::require_same_size(x.size(), c.size(), "bregman_prox_entropy_linear");
    if (!(eta >= 0.0) || !std::isfinite(eta)) {
        throw DomainError("bregman_prox_entropy_linear: eta must be finite and >= 0");
    }
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (!std::isfinite(c[j])) {
            throw DomainError("bregman_prox_entropy_linear: c is not finite");
        }
        z[j] = std::exp((std::log(x[j]) + eta * (c[j] - 1.0)) / (1.0 + eta));
    }
    return PositiveVector(std::move(z));
}

}  // namespace sinkmd
