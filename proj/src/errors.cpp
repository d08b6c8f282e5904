#include "wkam/errors.hpp"

namespace wkam {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::NotOnBoundary: return "NotOnBoundary";
    case ErrorCode::DegenerateGradient: return "DegenerateGradient";
    case ErrorCode::ProjectionDiverged: return "ProjectionDiverged";
    case ErrorCode::ObliquenessViolated: return "ObliquenessViolated";
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::StiffnessFailure: return "StiffnessFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyControlSet: return "EmptyControlSet";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::NegativeCycleAtC: return "NegativeCycleAtC";
    case ErrorCode::IncompatibleTrace: return "IncompatibleTrace";
    case ErrorCode::NotRelaxed: return "NotRelaxed";
    case ErrorCode::SlopeNotConverged: return "SlopeNotConverged";
    case ErrorCode::MissingPolicy: return "MissingPolicy";
    case ErrorCode::CalibrationLost: return "CalibrationLost";
    case ErrorCode::NoCheapLoop: return "NoCheapLoop";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace wkam
