#pragma once

#include <stdexcept>
#include <string>

namespace twogrid {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: grid dimensions, config keys, malformed files.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Numerical breakdown: singular pivots, indefinite preconditioner, Newton failure.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace twogrid
