#pragma once

#include <stdexcept>
#include <string>

namespace hogdiff {

// Base class for all library errors. The CLI maps subclasses to exit codes;
// library code throws and never calls exit().
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Graph data violates an invariant (asymmetry, nonzero diagonal, NaN, mask leakage).
struct InvalidGraphError : Error {
  using Error::Error;
};

// Numeric failure: eigensolver non-convergence, zero variance where a score is needed.
struct NumericError : Error {
  using Error::Error;
};

// A trajectory produced NaN/Inf during SDE integration.
struct DivergenceError : Error {
  using Error::Error;
};

// Bad configuration: unknown keys, missing fields, out-of-range values.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input file; messages carry 1-based line numbers where applicable.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace hogdiff
