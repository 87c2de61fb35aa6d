#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace metatune {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad argument to an operation (out-of-range index, nonpositive budget, ...).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// A cache or definition file does not follow its schema.
class SchemaError : public Error {
  public:
    using Error::Error;
};

/// A search space violates one or more of its invariants. Carries every violation found.
class ValidationError : public Error {
  public:
    explicit ValidationError(std::vector<std::string> violations);

    const std::vector<std::string>& violations() const noexcept {
        return violations_;
    }

  private:
    std::vector<std::string> violations_;
};

class ImportError : public Error {
  public:
    using Error::Error;
};

/// Invalid optimizer, synthetic-space or hyperparameter-grid definition.
class SpecError : public Error {
  public:
    using Error::Error;
};

/// An optimizer asked the runner for something outside the search space.
class ContractViolation : public Error {
  public:
    using Error::Error;
};

class ScoringError : public Error {
  public:
    using Error::Error;
};

/// The baseline never reaches the cutoff threshold.
class UnreachableBudget : public ScoringError {
  public:
    using ScoringError::ScoringError;
};

/// File could not be read or written.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace metatune
