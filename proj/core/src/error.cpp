#include "citeforge/error.hpp"

namespace citeforge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateQuestionId: return "DuplicateQuestionId";
    case ErrorCode::EmptyPassageList: return "EmptyPassageList";
    case ErrorCode::UnknownQuestionId: return "UnknownQuestionId";
    case ErrorCode::NoDistractorAvailable: return "NoDistractorAvailable";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyClaim: return "EmptyClaim";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::InvalidCitation: return "InvalidCitation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::RemoteScorerUnavailable: return "RemoteScorerUnavailable";
    case ErrorCode::RemoteProtocolError: return "RemoteProtocolError";
    case ErrorCode::EmptyAnswer: return "EmptyAnswer";
    case ErrorCode::NoGoldAnswers: return "NoGoldAnswers";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::MalformedReflection: return "MalformedReflection";
    case ErrorCode::MalformedChain: return "MalformedChain";
    case ErrorCode::AnnotationMismatch: return "AnnotationMismatch";
    case ErrorCode::GeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::EmptyAnnotation: return "EmptyAnnotation";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NonFiniteRatio: return "NonFiniteRatio";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(message), code_(code), line_(line) {}

}  // namespace citeforge
