#pragma once

#include <stdexcept>
#include <string>

namespace nagumo {

// Base class for every error raised by this library. Callers that only care
// about "did the computation succeed" can catch this one type; the derived
// classes exist so that callers can distinguish bad inputs (validation, CLI
// exit code 2) from numerical failures (exit code 3).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ----- input / domain validation (exit code 2) -----

struct DomainError : Error {
    using Error::Error;
};

struct InvalidItineraryError : DomainError {
    using DomainError::DomainError;
};

struct ThresholdViolationError : DomainError {
    using DomainError::DomainError;
};

// Requested homoclinic data at a = 1/2, where the loop degenerates into the
// pair of heteroclinic connections.
struct NoHomoclinicError : DomainError {
    using DomainError::DomainError;
};

// ----- numerical failures (exit code 3) -----

struct NumericalError : Error {
    using Error::Error;
};

struct IntegrationError : NumericalError {
    using NumericalError::NumericalError;
};

// Continuous angle is undefined because the trajectory passes through the
// winding center.
struct AngleUndefinedError : NumericalError {
    using NumericalError::NumericalError;
};

struct AmbiguousTurnCountError : NumericalError {
    using NumericalError::NumericalError;
};

struct QNotFoundError : NumericalError {
    using NumericalError::NumericalError;
};

struct ConstructionError : NumericalError {
    using NumericalError::NumericalError;
};

struct PathError : NumericalError {
    using NumericalError::NumericalError;
};

struct GeometryError : NumericalError {
    using NumericalError::NumericalError;
};

// A crossing was suspected but could not be resolved within the refinement
// budget; the verification result is neither pass nor fail.
struct InconclusiveError : NumericalError {
    using NumericalError::NumericalError;
};

struct RealizationFailedError : NumericalError {
    double surviving_lo = 0.0;   // deepest surviving parameter interval
    double surviving_hi = 0.0;
    RealizationFailedError(const std::string& msg, double lo, double hi)
        : NumericalError(msg), surviving_lo(lo), surviving_hi(hi) {}
};

struct FixedPointNotFoundError : NumericalError {
    using NumericalError::NumericalError;
};

struct LocalizationError : NumericalError {
    using NumericalError::NumericalError;
};

struct ConnectionNotFoundError : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace nagumo
