#pragma once

#include <stdexcept>
#include <string>

namespace dsolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes disagree with the network size.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Scenario or model data violates a documented invariant.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// |dP| too small to recover the reactive ratio from one observation.
class DegenerateObservation : public Error {
public:
    using Error::Error;
};

/// Two observations carry (almost) the same active response, so the
/// first-order conditions cannot be inverted for (c, d).
class SingularPair : public Error {
public:
    using Error::Error;
};

/// Recovered quadratic coefficient is zero; the response map is undefined.
class DegenerateCoefficient : public Error {
public:
    using Error::Error;
};

/// No incentive inside the search box satisfies the CVaR constraint.
class InfeasibleProblem : public Error {
public:
    using Error::Error;
};

/// Multiplier estimation did not produce a consistent answer.
class SensitivityError : public Error {
public:
    using Error::Error;
};

}  // namespace dsolab
