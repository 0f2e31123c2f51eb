#pragma once

#include <stdexcept>
#include <string>

namespace gammabayes {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative kernel ran out of iterations. Carries the last iterate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_iterate)
        : std::runtime_error(what), last_iterate_(last_iterate) {}

    double last_iterate() const noexcept { return last_iterate_; }

private:
    double last_iterate_;
};

/// Fewer observations than an estimator needs.
class InsufficientDataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// All observations equal: moments give no shape information.
class DegenerateSampleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// BL2 posterior with a non-negative linear coefficient has no positive mode.
class IllPosedPosteriorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An internal sign or finiteness guarantee was violated.
class NumericalAnomalyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gammabayes
