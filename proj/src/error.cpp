#include "semicr/error.hpp"

namespace semicr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::OrderViolation: return "OrderViolation";
    case ErrorCode::InconsistentIndicators: return "InconsistentIndicators";
    case ErrorCode::InvalidIndicator: return "InvalidIndicator";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::UnknownTransition: return "UnknownTransition";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NoVariation: return "NoVariation";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::MonotoneLikelihood: return "MonotoneLikelihood";
    case ErrorCode::DegenerateCovariate: return "DegenerateCovariate";
    case ErrorCode::EmptyRiskSet: return "EmptyRiskSet";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::GridBeforeT1: return "GridBeforeT1";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace semicr
