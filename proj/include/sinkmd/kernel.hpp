#pragma once

// Entropy mirror map w(x) = sum x_i (log x_i - 1), its Bregman divergence
// (the generalized KL divergence) and the stable log-sum-exp reduction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sinkmd/errors.hpp"

namespace sinkmd {

/// Dense vector with every entry finite and strictly positive.
class PositiveVector {
public:
    explicit PositiveVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            throw DomainError("PositiveVector: empty");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
                throw DomainError("PositiveVector: entry " + std::to_string(i) +
                                  " is not finite and positive");
            }
        }
    }
    PositiveVector(std::initializer_list<double> values)
        : PositiveVector(std::vector<double>(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const PositiveVector&, const PositiveVector&) = default;

private:
    std::vector<double> values_;
};

/// Row-major dense real matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        detail::require_same_size(data_.size(), rows * cols, "Matrix");
    }
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            detail::require_same_size(r.size(), cols_, "Matrix row");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& vector() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Matrix with every entry finite and strictly positive.
class PositiveMatrix {
public:
    explicit PositiveMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.size() == 0) {
            throw DomainError("PositiveMatrix: empty");
        }
        for (std::size_t i = 0; i < m_.rows(); ++i) {
            for (std::size_t j = 0; j < m_.cols(); ++j) {
                const double v = m_(i, j);
                if (!(v > 0.0) || !std::isfinite(v)) {
                    throw DomainError("PositiveMatrix: entry (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") is not finite and positive");
                }
            }
        }
    }

    std::size_t rows() const noexcept { return m_.rows(); }
    std::size_t cols() const noexcept { return m_.cols(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    std::span<const double> row(std::size_t i) const { return m_.row(i); }
    const Matrix& matrix() const noexcept { return m_; }

    /// Row-major flattening, the variable ordering used by as_constraint_system.
    PositiveVector vec() const { return PositiveVector(m_.vector()); }

private:
    Matrix m_;
};

namespace detail {

inline void require_positive(std::span<const double> x, const char* what) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
            throw DomainError(std::string(what) + ": entry " + std::to_string(i) +
                              " is not finite and positive");
        }
    }
}

/// x log(x/y) - x + y. Near x = y the direct formula cancels to zero long
/// before the true value does, so small t = x/y - 1 uses the series
/// y sum_{k>=2} (-t)^k / (k (k-1)).
inline double kl_term(double x, double y) {
    const double t = x / y - 1.0;
    if (std::abs(t) < 1e-2) {
        double sum = 0.0;
        double power = -t;
        for (int k = 2; k <= 10; ++k) {
            power *= -t;
            sum += power / (k * (k - 1));
        }
        return y * sum;
    }
    return std::max(x * std::log(x / y) - x + y, 0.0);
}

}  // namespace detail

/// Generalized KL divergence sum_i x_i log(x_i/y_i) - x_i + y_i.
inline double kl_div(std::span<const double> x, std::span<const double> y) {
    detail::require_same_size(x.size(), y.size(), "kl_div");
    detail::require_positive(x, "kl_div x");
    detail::require_positive(y, "kl_div y");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += detail::kl_term(x[i], y[i]);
    }
    return sum;
}

inline double kl_div(const PositiveVector& x, const PositiveVector& y) {
    return kl_div(x.values(), y.values());
}

/// w(x) = sum x_i (log x_i - 1).
inline double mirror_map(std::span<const double> x) {
    detail::require_positive(x, "mirror_map");
    double sum = 0.0;
    for (double xi : x) {
        sum += xi * (std::log(xi) - 1.0);
    }
    return sum;
}

inline double mirror_map(const PositiveVector& x) { return mirror_map(x.values()); }

inline std::vector<double> grad_mirror(std::span<const double> x) {
    detail::require_positive(x, "grad_mirror");
    std::vector<double> g(x.size());
    std::transform(x.begin(), x.end(), g.begin(), [](double v) { return std::log(v); });
    return g;
}

inline std::vector<double> grad_mirror(const PositiveVector& x) { return grad_mirror(x.values()); }

/// Gradient of the convex conjugate, elementwise exp. Throws RangeError when
/// an entry overflows or underflows to zero.
inline PositiveVector grad_conjugate(std::span<const double> g) {
    std::vector<double> x(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) {
            throw DomainError("grad_conjugate: entry " + std::to_string(i) + " is not finite");
        }
        x[i] = std::exp(g[i]);
        if (!std::isfinite(x[i]) || x[i] == 0.0) {
            throw RangeError("grad_conjugate: exp out of range at entry " + std::to_string(i));
        }
    }
    return PositiveVector(std::move(x));
}

/// Bregman divergence of the entropy map. Identical to kl_div.
inline double bregman_div(std::span<const double> x, std::span<const double> y) {
    return kl_div(x, y);
}

inline double bregman_div(const PositiveVector& x, const PositiveVector& y) {
    return kl_div(x, y);
}

/// max(v) + log sum exp(v_i - max(v)).
inline double log_sum_exp(std::span<const double> v) {
    if (v.empty()) {
        throw DomainError("log_sum_exp: empty vector");
    }
    const double m = *std::max_element(v.begin(), v.end());
    if (m == -std::numeric_limits<double>::infinity()) {
        return m;
    }
    double sum = 0.0;
    for (double vi : v) {
        sum += std::exp(vi - m);
    }
    return m + std::log(sum);
}

}  // namespace sinkmd
