#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hbdpt {

enum class ErrorCode {
  SortMismatch,
  ArityMismatch,
  DivisionByZero,
  UnboundVariable,
  UnknownVariable,
  MissingParam,
  SyntaxError,
  SchemaError,
  CycleError,
  NoFeedbackVars,
  AlgebraicLoop,
  BudgetExhausted,
  UnresolvedRef,
  SpaceTooLarge,
  SpaceMismatch,
  PreconditionViolated,
  UnsupportedBlock,
  ValidationFailed,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library. The code is the stable part; the
/// message is for humans.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace hbdpt
