#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssel {

enum class ErrorCode {
  UnknownColumn,
  OverlappingGroups,
  MissingColumn,
  InvalidSchema,
  InvalidOperation,
  InvalidConfig,
  DegenerateSequence,
  KeyNotFound,
  SchemaMismatch,
  CorruptSnapshot,
  EmptyInput,
  InsufficientData,
  FeatureVersionMismatch,
  EmptyWorkload,
  ModelMissing,
  ConversionVerifyFailed,
  TargetInvalid,
  UnsupportedVersion,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every module reports failures through this one exception type; the code is
// what callers (and the CLI exit-code mapping) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ssel
