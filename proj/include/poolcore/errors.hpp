#pragma once

#include <stdexcept>
#include <string>

namespace poolcore {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested divergence cannot be reached by any representable beta shape.
class UnreachableDivergence : public DomainError {
public:
    UnreachableDivergence(double target, double w, double max_attainable)
        : DomainError("divergence " + std::to_string(target) + " unreachable for w=" + std::to_string(w) +
                      "; max attainable is " + std::to_string(max_attainable)),
          target_(target), w_(w), max_attainable_(max_attainable) {}

    double target() const noexcept { return target_; }
    double w() const noexcept { return w_; }
    double max_attainable() const noexcept { return max_attainable_; }

private:
    double target_;
    double w_;
    double max_attainable_;
};

/// Pooled statistic has no rejection region at the requested level.
class NoRejectionRegion : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace poolcore
