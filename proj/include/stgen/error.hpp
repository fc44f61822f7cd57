#pragma once

#include <stdexcept>
#include <string>

namespace stgen {

/// Malformed input: mesh files, CSVs, configs, dataset headers.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that parses but violates a domain invariant (degenerate geometry,
/// unknown ids, shape mismatches, invalid parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver or time-stepper failure: non-convergence, breakdown, non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stgen
