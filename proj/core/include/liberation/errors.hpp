#pragma once

#include <stdexcept>
#include <string>

namespace liberation {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Validation of user-supplied values (preset parameters, CLI flags, ...).
struct BadParameter : Error {
    using Error::Error;
};

// A measure does not carry enough mass at 0 for the static-atom split.
struct MassDeficit : Error {
    using Error::Error;
};

// Transform evaluated at a pole (atom location on the real axis).
struct PoleAtZ : Error {
    using Error::Error;
};

// Argument outside the analyticity/convergence domain of a series or map.
struct DomainError : Error {
    using Error::Error;
};

// Stieltjes inversion produced a significantly negative value.
struct NegativeDensity : Error {
    using Error::Error;
};

// Quadratic branch selection is ill-conditioned (support edge).
struct BranchAmbiguity : Error {
    using Error::Error;
};

// Evaluation exactly on the branch cut of a multivalued map.
struct BranchCut : Error {
    using Error::Error;
};

// Iterative solver ran out of iterations / damping levels.
struct NoConvergence : Error {
    using Error::Error;
};

// Adaptive ODE step size underflowed.
struct StepFailure : Error {
    using Error::Error;
};

// alpha_ij pattern inconsistent with two projections in general position.
struct GeneralPositionViolated : Error {
    using Error::Error;
};

// Quadrature failed the Cauchy criterion under grid refinement.
struct DivergentIntegral : Error {
    using Error::Error;
};

// Exponential tail fit of a profile does not decay.
struct TailDivergence : Error {
    using Error::Error;
};

// Measure spec / config text could not be parsed; carries the position.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t pos)
        : Error(what + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

}  // namespace liberation
