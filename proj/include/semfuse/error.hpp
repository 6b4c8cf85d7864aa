#pragma once

#include <stdexcept>
#include <string>

namespace semfuse {

// Base of every error raised by the library. `module()` names the subsystem
// that raised it so command-line front ends can print "<module>: <what>".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Violated precondition on a call (dimension mismatch, out-of-range index...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InvalidCamera : public Error {
 public:
  explicit InvalidCamera(const std::string& what) : Error("geometry", what) {}
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace semfuse
