#pragma once

#include <stdexcept>
#include <string>

namespace gmrfglm {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Raised when a factorization meets a non-positive pivot.
class NotPositiveDefinite : public Error {
public:
  NotPositiveDefinite(const std::string &what, long pivot)
      : Error(what), pivot_(pivot) {}
  long pivot() const { return pivot_; }

private:
  long pivot_;
};

} // namespace gmrfglm
