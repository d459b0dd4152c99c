#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace citeforge {

enum class ErrorCode {
  MissingFile,
  MalformedRecord,
  DuplicateQuestionId,
  EmptyPassageList,
  UnknownQuestionId,
  NoDistractorAvailable,
  EmptyText,
  EmptyClaim,
  EmptyQuestion,
  InvalidCitation,
  InvalidConfig,
  RemoteScorerUnavailable,
  RemoteProtocolError,
  EmptyAnswer,
  NoGoldAnswers,
  EmptyReference,
  MalformedReflection,
  MalformedChain,
  AnnotationMismatch,
  GeneratorUnavailable,
  ShapeMismatch,
  EmptySequence,
  EmptyAnnotation,
  GroupTooSmall,
  NonFiniteInput,
  EmptyBatch,
  NonFiniteRatio,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library. The code identifies the failure
/// class; `line()` is set for errors that point at a line of an input file or
/// of a reflection text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace citeforge
