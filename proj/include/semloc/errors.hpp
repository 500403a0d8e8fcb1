#pragma once

#include <stdexcept>
#include <string>

namespace semloc {

enum class ErrorKind {
  ZeroVector,
  DimensionMismatch,
  ShapeMismatch,
  EmptyNegatives,
  BatchTooSmall,
  MissingNeighborAssignment,
  EmptyCorpus,
  EmptyVocabulary,
  VocabularyTooSmall,
  UnknownToken,
  AllTokensUnknown,
  ParseError,
  DuplicateId,
  IoError,
  TooFewVectors,
  UnknownId,
  EmptyNeighborhood,
  MissingFeatures,
  ConfigInvalid,
  DatasetTooSmall,
  TooFewDistractors,
  IdMismatch,
};

const char* to_string(ErrorKind kind);

// Single exception type for all recoverable failures. The kind is stable and
// machine readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace semloc
