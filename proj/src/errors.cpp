#include "mdd/errors.hpp"

namespace mdd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::OutOfBox: return "OutOfBox";
    case ErrorCode::NonPositiveCoefficient: return "NonPositiveCoefficient";
    case ErrorCode::DegenerateExponents: return "DegenerateExponents";
    case ErrorCode::OutsideSolvedRange: return "OutsideSolvedRange";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::SingularRHS: return "SingularRHS";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::NoAdmissibleSolution: return "NoAdmissibleSolution";
    case ErrorCode::TooManyCrossings: return "TooManyCrossings";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::HorizonDominates: return "HorizonDominates";
    case ErrorCode::TooCloseToKink: return "TooCloseToKink";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace mdd
