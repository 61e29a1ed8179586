#pragma once

#include <stdexcept>
#include <string>

namespace sps2 {

// Base class for all toolkit failures.  Subclasses distinguish the broad
// failure modes so callers (and the CLI) can map them to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Hypothesis failures: the input system does not satisfy a structural
// hypothesis required by an algorithm.
struct HypothesisError : Error {
    using Error::Error;
};

// Leading residue matrix has a repeated eigenvalue.
struct GenericityError : HypothesisError {
    using HypothesisError::HypothesisError;
};

// Eigenvalue separation degenerates on some direction of the arc.
struct ResonanceError : HypothesisError {
    using HypothesisError::HypothesisError;
};

// Structural misuse: incompatible truncations/arcs/steps, non-invertible
// gauge, malformed containers.
struct StructuralError : Error {
    using Error::Error;
};

// Numerical failures.
struct NumericalError : Error {
    using Error::Error;
};

// Iteration failed to converge within its budget.
struct ConvergenceError : NumericalError {
    using NumericalError::NumericalError;
};

// A term series grew instead of decaying.
struct DivergenceError : NumericalError {
    using NumericalError::NumericalError;
};

// A recursively defined sequence overflowed the double range.
struct OverflowError : NumericalError {
    int offending_k = -1;
    OverflowError(const std::string& what, int k) : NumericalError(what), offending_k(k) {}
};

// Evaluation requested outside the admissible parameter domain.
struct DomainError : NumericalError {
    using NumericalError::NumericalError;
};

// A Pade denominator root obstructs the integration ray.
struct PoleOnRayError : NumericalError {
    using NumericalError::NumericalError;
};

// The ODE integrator detected a step collapse (stiffness guard).
struct StiffnessError : NumericalError {
    using NumericalError::NumericalError;
};

// Input-file problems (I/O, malformed JSON, missing keys).
struct ParseError : Error {
    using Error::Error;
};

// Semantically invalid but well-formed input (bad ranges, inconsistent
// truncations requested on the command line, ...).
struct ValidationError : Error {
    using Error::Error;
};

}  // namespace sps2
