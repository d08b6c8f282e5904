#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wkam {

enum class ErrorCode {
  SpecError,
  NotOnBoundary,
  DegenerateGradient,
  ProjectionDiverged,
  ObliquenessViolated,
  InvalidDomain,
  StiffnessFailure,
  NoConvergence,
  EmptyControlSet,
  BracketFailure,
  NegativeCycleAtC,
  IncompatibleTrace,
  NotRelaxed,
  SlopeNotConverged,
  MissingPolicy,
  CalibrationLost,
  NoCheapLoop,
  NotConverged,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace wkam
