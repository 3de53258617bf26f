#pragma once

#include <stdexcept>
#include <string>

namespace omt {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The alternative model is valid but not handled by the requested operation
/// (scores are only defined for independent statistics).
class UnsupportedModel : public Error {
public:
    using Error::Error;
};

/// Numerical failures: quadrature and root finding.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ToleranceNotMet : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoBracket : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class MaxIterations : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Observed proportion of 0 or 1 makes the unpooled variance vanish.
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

/// A power target cannot be reached below the configured sample-size cap.
class Unachievable : public Error {
public:
    using Error::Error;
};

}  // namespace omt
