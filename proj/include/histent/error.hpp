#ifndef HISTENT_ERROR_HPP
#define HISTENT_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace histent {

enum class ErrorCode {
  MalformedInput,
  OffsetOutOfRange,
  UnknownConcept,
  SurfaceMismatch,
  UnclosedTag,
  UnknownClass,
  NestedTag,
  OverlappingEntities,
  LengthMismatch,
  CrossDocumentEntity,
  MissingTotal,
  InstanceTooLarge,
  ZeroVariance,
  EmptyMargin,
  DomainError,
  UnknownHeaderGroup,
  NonFiniteLoss,
  EmptyFold,
  MissingBme,
  DocIdMismatch,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

/// Source position attached to parse failures. Lines and columns are 1-based.
struct SourceLocation {
  std::string file;
  std::optional<std::size_t> line;
  std::optional<std::size_t> column;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, const std::string& message, SourceLocation where)
      : std::runtime_error(message), code_(code), where_(std::move(where)) {}

  ErrorCode code() const noexcept { return code_; }
  const SourceLocation& where() const noexcept { return where_; }

  /// Returns a copy with missing location fields filled from `outer`.
  Error located(const SourceLocation& outer) const;

 private:
  ErrorCode code_;
  SourceLocation where_;
};

}  // namespace histent

#endif  // HISTENT_ERROR_HPP
