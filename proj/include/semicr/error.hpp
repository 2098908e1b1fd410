#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semicr {

enum class ErrorCode {
  // input validation
  EmptyCohort,
  NonPositiveTime,
  OrderViolation,
  InconsistentIndicators,
  InvalidIndicator,
  NonFiniteValue,
  NonPositiveWeight,
  DuplicateId,
  SchemaError,
  IoError,
  InvalidArgument,
  NegativeInput,
  UnknownTransition,
  // propensity
  Separation,
  RankDeficient,
  NoVariation,
  NotConverged,
  ZeroVariance,
  // cox
  NoEvents,
  MonotoneLikelihood,
  DegenerateCovariate,
  EmptyRiskSet,
  SingularInformation,
  // curves and EM
  GridBeforeT1,
  QuadratureFailure,
  MaxIterationsExceeded,
  // resampling
  TooManyFailures,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semicr
