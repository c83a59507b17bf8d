#pragma once

#include <stdexcept>
#include <string>

namespace sinkmd {

/// Input outside the strictly positive domain of the entropy map (zero,
/// negative or non-finite entries, nonpositive inner products).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Mismatched vector/matrix shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Overflow or underflow while leaving the log domain.
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// An inner iterative routine (root finder, bracket search) hit its cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": size mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

}  // namespace detail
}  // namespace sinkmd
