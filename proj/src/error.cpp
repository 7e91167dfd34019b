#include "canonflow/error.hpp"

namespace canonflow {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DomainBlowup: return "DomainBlowup";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::SupportLeakage: return "SupportLeakage";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::ImaginaryFrequency: return "ImaginaryFrequency";
    case ErrorKind::NegativeRadicand: return "NegativeRadicand";
    case ErrorKind::MassZeroCrossing: return "MassZeroCrossing";
    case ErrorKind::TruncationError: return "TruncationError";
    case ErrorKind::ResolutionError: return "ResolutionError";
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorKind::NonMonotoneFlow: return "NonMonotoneFlow";
    case ErrorKind::FixedPointInInterval: return "FixedPointInInterval";
    case ErrorKind::ScenarioError: return "ScenarioError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, std::string module, const std::string& message)
    : std::runtime_error(message), kind_(kind), module_(std::move(module)) {}

}  // namespace canonflow
