#pragma once

#include <stdexcept>
#include <string>

namespace confseg {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands have incompatible pixel dimensions.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The requested (alpha, tau) pair cannot be calibrated on the given data:
/// no parameter subset covers the required fraction of calibration points,
/// or no risk-curve prefix meets the risk-control threshold.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// File, schema, or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace confseg
