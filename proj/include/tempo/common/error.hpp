#pragma once

#include <stdexcept>
#include <string>

namespace tempo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or configuration dimensions that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied parameter or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tempo
