#pragma once

#include <stdexcept>
#include <string>

namespace dphe {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A ciphertext was used with a key it was not produced under.
class KeyMismatchError : public Error {
 public:
  explicit KeyMismatchError(const std::string& what) : Error(what) {}
};

// A sparse vector has more non-zeros than the encryption capacity allows.
class CapacityExceededError : public Error {
 public:
  explicit CapacityExceededError(const std::string& what) : Error(what) {}
};

// Invalid protocol or training configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// File or stream input/output failure.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

// A protocol transcript leaks something a party must never receive.
class SecurityError : public Error {
 public:
  explicit SecurityError(const std::string& what) : Error(what) {}
};

}  // namespace dphe
