#pragma once

#include <stdexcept>
#include <string>

namespace pce {

// Failure classes. The split drives process exit codes: problems a user can
// fix by changing the input or flags are "input" errors, everything else is
// an estimation-time failure.
enum class ErrorKind {
  kParseError,
  kInvalidArgument,
  kNonBinaryTreatment,
  kNonBinaryIntermediate,
  kInconsistentCovariateDim,
  kEmptyDataset,
  kEmptyCell,
  kDegenerateResponse,
  kRankDeficientDesign,
  kPositivityViolation,
  kDivisionByZero,
  kDegenerateStratum,
  kNonPositiveDenominator,
  kTooManyFailures,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  bool is_input_error() const {
    switch (kind_) {
      case ErrorKind::kParseError:
      case ErrorKind::kInvalidArgument:
      case ErrorKind::kNonBinaryTreatment:
      case ErrorKind::kNonBinaryIntermediate:
      case ErrorKind::kInconsistentCovariateDim:
      case ErrorKind::kEmptyDataset:
        return true;
      default:
        return false;
    }
  }

  // CLI exit status: 2 for input problems, 3 for estimation failures.
  int exit_code() const { return is_input_error() ? 2 : 3; }

 private:
  ErrorKind kind_;
};

}  // namespace pce
