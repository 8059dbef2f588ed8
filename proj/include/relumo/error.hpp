#pragma once

#include <stdexcept>
#include <string>

namespace relumo {

// Base of all library errors. Bad inputs (shapes, ranges, missing files)
// throw Error directly; NumericalError marks failures of the numerics
// themselves (rank deficiency, divergence) so callers can map them to a
// distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Two views share no usable pixels.
class NoOverlapError : public Error {
 public:
  using Error::Error;
};

}  // namespace relumo
