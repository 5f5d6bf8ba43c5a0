#pragma once

#include <stdexcept>
#include <string>

namespace rmab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericDegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Task parameters do not have the Type-1 / Type-2 shape a routine requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonIndexableError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference probe interval contains a policy switch.
class StraddleError : public Error {
 public:
  using Error::Error;
};

class GridTooCoarseError : public Error {
 public:
  using Error::Error;
};

/// The joint product space exceeds the configured cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

class GeneratorError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace rmab
