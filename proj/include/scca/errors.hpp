#pragma once

#include <stdexcept>
#include <string>

namespace scca {

// Raised when inputs violate an operation's preconditions (shapes, ranges).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a numerical step cannot proceed (singular roots, degenerate
// nodewise columns, non-PSD joint covariance).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when too many Monte Carlo replications fail to produce a fit.
class DegenerateRunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

}  // namespace scca
