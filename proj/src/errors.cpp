#include "asba/errors.hpp"

namespace asba {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownAtomSymbol: return "UnknownAtomSymbol";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateBond: return "DuplicateBond";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::UnsupportedToken: return "UnsupportedToken";
    case ErrorCode::UnmatchedRingBond: return "UnmatchedRingBond";
    case ErrorCode::UnbalancedParenthesis: return "UnbalancedParenthesis";
    case ErrorCode::PatternTooLarge: return "PatternTooLarge";
    case ErrorCode::NotAPermutation: return "NotAPermutation";
    case ErrorCode::TargetTooSmall: return "TargetTooSmall";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UncoveredAtomType: return "UncoveredAtomType";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AllLabelsMissing: return "AllLabelsMissing";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::LocalTokenNotPredictable: return "LocalTokenNotPredictable";
    case ErrorCode::FileError: return "FileError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotScalarLoss: return "NotScalarLoss";
    case ErrorCode::DetachedTensor: return "DetachedTensor";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::DegenerateBoundary: return "DegenerateBoundary";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
  }
  return "UnknownError";
}

int error_exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
      return 1;
    case ErrorCode::ShapeMismatch:
    case ErrorCode::NotScalarLoss:
    case ErrorCode::DetachedTensor:
    case ErrorCode::SingularCovariance:
    case ErrorCode::DegenerateBoundary:
    case ErrorCode::NonPositiveTau:
      return 3;
    default:
      return 2;
  }
}

}  // namespace asba
