#pragma once

#include <stdexcept>
#include <string>

namespace revdeconv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A real value cannot be represented in the fixed-point format.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, truncated data, config syntax).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// I/O failure opening or writing a file.
class FileError : public Error {
 public:
  using Error::Error;
};

/// A candidate design violates on-chip resource limits.
class InfeasibleDesign : public Error {
 public:
  using Error::Error;
};

/// No candidate design fits the platform.
class InfeasiblePlatform : public Error {
 public:
  using Error::Error;
};

/// MMD bandwidth collapsed to zero (all ground-truth samples identical).
class DegenerateBandwidth : public Error {
 public:
  using Error::Error;
};

}  // namespace revdeconv
