#pragma once

#include <stdexcept>
#include <string>

namespace optex {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};

/// Information matrix failed the relative-eigenvalue nonsingularity test.
struct SingularInformation : Error {
  using Error::Error;
};

struct SingularMatrix : Error {
  using Error::Error;
};

/// Localized regressors do not span the parameter space.
struct RankDeficient : Error {
  using Error::Error;
};

/// C(X) is not contained in C(N(w)); the (w, X) pairing is invalid.
struct ColumnSpaceViolation : Error {
  using Error::Error;
};

struct InfiniteBound : Error {
  using Error::Error;
};

struct InfeasibleCaps : Error {
  using Error::Error;
};

/// Exchange heuristic could not find a feasible nonsingular start.
struct NoFeasibleStart : Error {
  using Error::Error;
};

/// Simplex exceeded its pivot budget; signals numerical trouble.
struct IterationLimit : Error {
  using Error::Error;
};

struct TooLarge : Error {
  using Error::Error;
};

struct NoFeasibleDesign : Error {
  using Error::Error;
};

struct NameCollision : Error {
  using Error::Error;
};

struct MissingObjective : Error {
  using Error::Error;
};

/// Malformed LP/MPS input; carries the offending line number.
struct SyntaxError : Error {
  SyntaxError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_number(line) {}
  int line_number;
};

/// Problem/constraint/bounds file does not match the expected JSON schema.
struct SchemaError : Error {
  using Error::Error;
};

}  // namespace optex
