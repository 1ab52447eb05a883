#pragma once

#include <stdexcept>
#include <string>

namespace stubborn {

/// A configuration value violates its documented range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called in a state that does not permit it.
class InvalidStateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A non-finite value appeared in features, activations or losses.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checkpoint or metrics file does not have the expected format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stubborn
