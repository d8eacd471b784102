#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gallop {

enum class ErrorCode {
  InvalidArgument,
  StepSizeUnderflow,
  NonFiniteState,
  NoConvergence,
  ResidualTooLarge,
  NoSignChange,
  NewtonDiverged,
  NoReturn,
  ContinuationStall,
  FocusLost,
  BranchEscapedBeforeSection,
};

std::string_view to_string(ErrorCode code);

/// Every solver failure in the library is reported through this type. The
/// code lets callers (notably the CLI exit-code mapping) distinguish
/// configuration mistakes from numerical breakdown.
class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gallop
