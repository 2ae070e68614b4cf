#pragma once

#include <stdexcept>
#include <string>

namespace tagforge {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Dataset content violates an invariant (bad ids, inconsistent counts, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// A file on disk does not follow its binary or text format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Network failure or non-200 reply from an embedding service.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace tagforge
