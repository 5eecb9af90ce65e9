#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gvarfsv {

// Base class; the CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (dimension mismatch, invalid values).
class InputError : public Error {
 public:
  using Error::Error;
};

// Configuration failed validation. Carries every problem found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Numerical breakdown: non-PD matrices, singular systems, non-finite draws.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

void require(bool condition, const std::string& message);

void warn(const std::string& message);

}  // namespace gvarfsv
