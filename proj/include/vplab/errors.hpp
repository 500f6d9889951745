#pragma once

#include <stdexcept>
#include <string>

namespace vplab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument or configuration violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A computation could not be completed to the requested accuracy
/// (singular configuration, collision, under-resolution, CFL violation, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace vplab
