#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace senti {

/// Failure categories raised across the library. The CLI prints the name
/// verbatim, so renaming an enumerator is a user-visible change.
enum class ErrorCode {
  NotFound,
  DecodeError,
  IoError,
  InvalidArgument,
  ShapeMismatch,
  BackendUnavailable,
  ParseError,
  DuplicateId,
  MissingField,
  EntryImageError,
  CorruptIndex,
  MissingEdgeMap,
  NoCandidates,
  MissingTensor,
  FormatError,
  InputTooSmall,
  NonFiniteLoss,
  PairShapeMismatch,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }
  /// Message without the "<Name>: " prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace senti
