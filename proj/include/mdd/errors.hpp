#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdd {

enum class ErrorCode {
  InvalidParams,
  InvalidState,
  OutOfBox,
  NonPositiveCoefficient,
  DegenerateExponents,
  OutsideSolvedRange,
  BracketFailure,
  SingularRHS,
  ConstraintViolation,
  StepFailure,
  NoAdmissibleSolution,
  TooManyCrossings,
  EmptyRegion,
  NonConvergence,
  HorizonDominates,
  TooCloseToKink,
  NotApplicable,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace mdd
