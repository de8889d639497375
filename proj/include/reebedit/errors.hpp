#pragma once

#include <stdexcept>
#include <string>

namespace reebedit {

/// Base class for all domain errors raised by this library.
/// Messages name the violated precondition or invariant so callers can
/// surface them directly (the CLI maps these to exit code 1).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Derivative order not available for the given representation
/// (order >= 1 at a piecewise-linear breakpoint, order 2 for PL).
class UnsupportedDerivative : public Error {
 public:
  using Error::Error;
};

/// The function is not simple Morse: a degenerate critical point,
/// a repeated critical value, or no critical points at all.
class NotSimpleMorse : public Error {
 public:
  using Error::Error;
};

/// Two functions of different representations were combined where a
/// single representation is required.
class MixedRepresentation : public Error {
 public:
  using Error::Error;
};

/// A vertex list does not describe a labelled Reeb graph of a circle
/// function (odd count, broken alternation, non-injective labels, ...).
class InvalidGraph : public Error {
 public:
  using Error::Error;
};

/// An elementary deformation violates its validity pattern.
class InvalidDeformation : public Error {
 public:
  using Error::Error;
};

/// A deformation refers to a vertex id absent from the graph.
class UnknownVertexId : public InvalidDeformation {
 public:
  using InvalidDeformation::InvalidDeformation;
};

/// Death requested on a graph that already has the minimum two vertices.
class DeathOnTwoVertexGraph : public InvalidDeformation {
 public:
  using InvalidDeformation::InvalidDeformation;
};

/// A plan's matching or pairings are inconsistent with the two graphs.
class InvalidPlan : public Error {
 public:
  using Error::Error;
};

/// A bounded search exhausted its operation budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Sampling resolution too low for the number of critical points.
class ResolutionTooLow : public Error {
 public:
  using Error::Error;
};

/// A homotopy passed through a configuration the tracer cannot resolve
/// (coincident events, non-generic endpoint, unresolvable grid point).
class NonGenericPath : public Error {
 public:
  using Error::Error;
};

/// Replaying a constructed script did not reproduce the expected graph.
class ReplayMismatch : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument violates a stated precondition.
class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling failed to produce a valid draw within its budget.
class RejectionBudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace reebedit
