#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdeis {

enum class ErrorCode {
  NonFiniteModelOutput,
  NonFiniteCost,
  UnknownModel,
  InvalidParam,
  NotPositiveDefinite,
  MaxItersExceeded,
  SampleFailed,
  RunFailed,
  EmptyEnsemble,
  OutOfRangeStep,
  NonPositiveValue,
  ModelNotSupported,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteModelOutput: return "NonFiniteModelOutput";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::MaxItersExceeded: return "MaxItersExceeded";
    case ErrorCode::SampleFailed: return "SampleFailed";
    case ErrorCode::RunFailed: return "RunFailed";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::OutOfRangeStep: return "OutOfRangeStep";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::ModelNotSupported: return "ModelNotSupported";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Library error. Every failure mode carries a stable code so callers (the
/// ensemble runner in particular) can classify without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sdeis
