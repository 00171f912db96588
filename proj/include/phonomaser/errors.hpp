#pragma once

#include <stdexcept>
#include <string>

namespace phonomaser {

/// Bad Fock-space dimension (must be >= 2).
struct InvalidDimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Out-of-range physical parameter (negative occupancy, bad probability, ...).
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Generic numerical failure (non-finite input, solver breakdown).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A tolerance-gated computation failed to converge to its target precision.
struct PrecisionError : NumericError {
    using NumericError::NumericError;
};

/// Post-selection onto a state with vanishing success trace.
struct DegeneratePostselection : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two supposedly equivalent evolution routes disagree beyond tolerance.
struct FactorizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation requested on a channel it is not defined for.
struct UnsupportedChannel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Internal sanity check failed (imaginary residue, norm drift, ...).
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adaptive integrator step size underflowed.
struct StiffnessError : std::runtime_error {
    double time_reached;
    StiffnessError(const std::string& what, double t)
        : std::runtime_error(what), time_reached(t) {}
};

/// Malformed scenario or configuration input.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace phonomaser
