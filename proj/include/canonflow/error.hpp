#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace canonflow {

enum class ErrorKind {
  InvalidArgument,
  DomainBlowup,
  StepFailure,
  DivisionByZero,
  SupportLeakage,
  NotNormalized,
  ImaginaryFrequency,
  NegativeRadicand,
  MassZeroCrossing,
  TruncationError,
  ResolutionError,
  SingularMetric,
  LinearSolveFailure,
  NonMonotoneFlow,
  FixedPointInInterval,
  ScenarioError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind and the name of the
/// module that detected it, so front ends can report both.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

}  // namespace canonflow
