#pragma once

#include <stdexcept>
#include <string>

namespace sinet {

// Base for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/rank mismatches and size preconditions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad dataset content: duplicate ids, empty batches, unknown characters, ...
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized bytes: CSV structure, checkpoint files, vocab files.
class FormatError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where finite values are required, domain errors.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse: wrong variant/input combination, invalid configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sinet
