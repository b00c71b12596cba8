#pragma once

#include <stdexcept>
#include <string>

namespace hdch {

/// Base class of all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRange : Error {
    using Error::Error;
};

/// Raised when an operation requiring mean-zero data receives data with
/// a mean exceeding its tolerance.
struct NonZeroMean : Error {
    using Error::Error;
};

struct MissingEpsilon : Error {
    using Error::Error;
};

struct NoRoot : Error {
    using Error::Error;
};

struct NotPositiveCoefficient : Error {
    using Error::Error;
};

/// Iterative solver exhausted its budget. Carries the last residual so
/// callers can report it.
struct NoConvergence : Error {
    NoConvergence(const std::string& what, double residual, int iters)
        : Error(what), final_residual(residual), iterations(iters) {}
    double final_residual;
    int iterations;
};

struct NewtonDiverged : NoConvergence {
    using NoConvergence::NoConvergence;
};

struct InvalidParams : Error {
    using Error::Error;
};

struct EmptyTrajectory : Error {
    using Error::Error;
};

struct NegativeInput : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace hdch
