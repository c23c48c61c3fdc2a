#include "ssel/error.hpp"

namespace ssel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::OverlappingGroups: return "OverlappingGroups";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::InvalidOperation: return "InvalidOperation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateSequence: return "DegenerateSequence";
    case ErrorCode::KeyNotFound: return "KeyNotFound";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::FeatureVersionMismatch: return "FeatureVersionMismatch";
    case ErrorCode::EmptyWorkload: return "EmptyWorkload";
    case ErrorCode::ModelMissing: return "ModelMissing";
    case ErrorCode::ConversionVerifyFailed: return "ConversionVerifyFailed";
    case ErrorCode::TargetInvalid: return "TargetInvalid";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ssel
