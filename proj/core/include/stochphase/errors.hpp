#pragma once

#include <stdexcept>
#include <string>

namespace stochphase {

/// Base class for failures caused by the problem data rather than by misuse
/// of the API. The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public DomainError {
 public:
  using DomainError::DomainError;
};

class DivergenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

class TimeoutError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SingularSystemError : public DomainError {
 public:
  SingularSystemError(const std::string& what, double residual)
      : DomainError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class EigenSolverError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NonOscillatoryError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ZeroCrossingError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Prefixes a stage label onto a domain error message (used by the harness).
class StageError : public DomainError {
 public:
  StageError(const std::string& stage, const std::string& what)
      : DomainError(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace stochphase
