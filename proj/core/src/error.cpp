#include "senti/error.hpp"

namespace senti {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EntryImageError: return "EntryImageError";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::MissingEdgeMap: return "MissingEdgeMap";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::MissingTensor: return "MissingTensor";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::InputTooSmall: return "InputTooSmall";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::PairShapeMismatch: return "PairShapeMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace senti
