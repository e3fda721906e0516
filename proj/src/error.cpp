#include "histent/error.hpp"

namespace histent {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::SurfaceMismatch: return "SurfaceMismatch";
    case ErrorCode::UnclosedTag: return "UnclosedTag";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::NestedTag: return "NestedTag";
    case ErrorCode::OverlappingEntities: return "OverlappingEntities";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::CrossDocumentEntity: return "CrossDocumentEntity";
    case ErrorCode::MissingTotal: return "MissingTotal";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::EmptyMargin: return "EmptyMargin";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::UnknownHeaderGroup: return "UnknownHeaderGroup";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyFold: return "EmptyFold";
    case ErrorCode::MissingBme: return "MissingBme";
    case ErrorCode::DocIdMismatch: return "DocIdMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error Error::located(const SourceLocation& outer) const {
  SourceLocation merged = where_;
  if (merged.file.empty()) merged.file = outer.file;
  if (!merged.line) merged.line = outer.line;
  if (!merged.column) merged.column = outer.column;
  return Error(code_, what(), std::move(merged));
}

}  // namespace histent
