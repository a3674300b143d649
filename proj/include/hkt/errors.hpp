#pragma once

#include <stdexcept>
#include <string>

namespace hkt {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension argument is non-positive or otherwise unusable.
struct InvalidDimension : Error {
  using Error::Error;
};

/// Operands have incompatible or odd shapes.
struct ShapeError : Error {
  using Error::Error;
};

/// Basis index out of range or violating the block ordering r < s.
struct InvalidIndex : Error {
  using Error::Error;
};

/// Complex spectrum does not split into coincident pairs within tolerance.
struct NotQuaternionic : Error {
  using Error::Error;
};

/// Input violates a documented precondition (e.g. matrix not diagonal).
struct PreconditionViolated : Error {
  using Error::Error;
};

/// Top eigenvalue is repeated, so its perturbation calculus is undefined.
struct DegenerateTopEigenvalue : Error {
  using Error::Error;
};

/// Spectrum left the admissibility cone of the active equation family.
struct OutsideCone : Error {
  using Error::Error;
};

/// A field state is not pointwise admissible; carries a witness location.
struct NotAdmissible : Error {
  NotAdmissible(const std::string& what, long witness) : Error(what), witness_index(witness) {}
  long witness_index = -1;
};

/// Grid dimensions unusable for spectral differentiation.
struct GridError : Error {
  using Error::Error;
};

/// Background matrix field is not pointwise hyperhermitian.
struct InvalidChi : Error {
  using Error::Error;
};

/// Ball field attains its minimum on the boundary shell, not the interior.
struct NoInteriorMin : Error {
  using Error::Error;
};

/// Backtracking could not find an acceptable Newton step above the floor.
struct LineSearchFailed : Error {
  using Error::Error;
};

/// Krylov iteration made no usable progress on the linearized system.
struct LinearSolveStalled : Error {
  using Error::Error;
};

/// Run configuration file is malformed or fails validation.
struct ConfigError : Error {
  using Error::Error;
};

/// Another process holds the output directory lock.
struct OutputLocked : Error {
  using Error::Error;
};

}  // namespace hkt
