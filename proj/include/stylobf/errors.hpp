#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stylobf {

enum class ErrorCode {
  kMalformedRecord,
  kDuplicateId,
  kEmptyCorpus,
  kInvalidSplit,
  kAuthorTooSmall,
  kUnknownTag,
  kEmptyTraining,
  kSingleAuthor,
  kDimensionMismatch,
  kSpaceMismatch,
  kInvalidClass,
  kInvalidArgument,
  kFormat,
  kIo,
  kFillTimeout,
  kFillProtocol,
  kFillServer,
  kGeneratorUnavailable,
  kEmptyEvaluationSet,
  kEmptyInput,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInvalidSplit: return "InvalidSplit";
    case ErrorCode::kAuthorTooSmall: return "AuthorTooSmall";
    case ErrorCode::kUnknownTag: return "UnknownTag";
    case ErrorCode::kEmptyTraining: return "EmptyTraining";
    case ErrorCode::kSingleAuthor: return "SingleAuthor";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSpaceMismatch: return "SpaceMismatch";
    case ErrorCode::kInvalidClass: return "InvalidClass";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kFillTimeout: return "Timeout";
    case ErrorCode::kFillProtocol: return "ProtocolError";
    case ErrorCode::kFillServer: return "ServerError";
    case ErrorCode::kGeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::kEmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorCode::kEmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& detail)
      : Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line) + ": " + detail),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::string id)
      : Error(ErrorCode::kDuplicateId, "\"" + id + "\""), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class AuthorTooSmall : public Error {
 public:
  explicit AuthorTooSmall(std::string author)
      : Error(ErrorCode::kAuthorTooSmall, "author \"" + author + "\" cannot populate every split"),
        author_(std::move(author)) {}
  const std::string& author() const noexcept { return author_; }

 private:
  std::string author_;
};

class UnknownTag : public Error {
 public:
  explicit UnknownTag(std::string tag)
      : Error(ErrorCode::kUnknownTag, "\"" + tag + "\" is not in the tagset"), tag_(std::move(tag)) {}
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

// Format errors name the section of the artifact that failed to parse.
class FormatError : public Error {
 public:
  FormatError(std::string section, const std::string& detail)
      : Error(ErrorCode::kFormat, "section '" + section + "': " + detail), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

}  // namespace stylobf
