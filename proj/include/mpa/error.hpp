#pragma once

#include <stdexcept>
#include <string>

namespace mpa {

/// Failure families; the CLI maps each to a distinct exit status.
enum class ErrorCategory { Config, Capacity, Numeric, Precondition };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

/// A cube, grid or matrix would exceed a configured size cap.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(ErrorCategory::Capacity, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

/// Energy too close to the spectrum for a safe linear solve.
class ResonantEnergyError : public NumericError {
 public:
  explicit ResonantEnergyError(const std::string& what) : NumericError(what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorCategory::Precondition, what) {}
};

}  // namespace mpa
