#pragma once

#include <stdexcept>
#include <string>

namespace asba {

enum class ErrorCode {
  // data and parsing
  UnknownAtomSymbol,
  IndexOutOfRange,
  DuplicateBond,
  SelfLoop,
  MalformedDocument,
  UnsupportedToken,
  UnmatchedRingBond,
  UnbalancedParenthesis,
  PatternTooLarge,
  NotAPermutation,
  TargetTooSmall,
  EmptyCorpus,
  UncoveredAtomType,
  EmptyGraph,
  EmptyInput,
  AllLabelsMissing,
  SingleClass,
  BatchTooSmall,
  LocalTokenNotPredictable,
  FileError,
  ConfigError,
  // numeric
  ShapeMismatch,
  NotScalarLoss,
  DetachedTensor,
  SingularCovariance,
  DegenerateBoundary,
  NonPositiveTau,
};

const char* error_code_name(ErrorCode c);

// CLI exit-code category: 1 usage, 2 data, 3 numeric.
int error_exit_code(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace asba
