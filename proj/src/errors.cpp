#include "semloc/errors.hpp"

namespace semloc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyNegatives: return "EmptyNegatives";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::MissingNeighborAssignment: return "MissingNeighborAssignment";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorKind::VocabularyTooSmall: return "VocabularyTooSmall";
    case ErrorKind::UnknownToken: return "UnknownToken";
    case ErrorKind::AllTokensUnknown: return "AllTokensUnknown";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::TooFewVectors: return "TooFewVectors";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorKind::MissingFeatures: return "MissingFeatures";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorKind::TooFewDistractors: return "TooFewDistractors";
    case ErrorKind::IdMismatch: return "IdMismatch";
  }
  return "Unknown";
}

}  // namespace semloc
