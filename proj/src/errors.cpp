#include "outcomenorm/errors.hpp"

namespace outcomenorm {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyOutcome: return "EmptyOutcome";
    case ErrorKind::kSchema: return "SchemaError";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kTaxonomy: return "TaxonomyError";
    case ErrorKind::kVocab: return "VocabError";
    case ErrorKind::kStoreFormat: return "StoreFormatError";
    case ErrorKind::kDimension: return "DimensionError";
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kEmptyPool: return "EmptyPool";
    case ErrorKind::kMissingEmbedding: return "MissingEmbedding";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kAttentionFormat: return "AttentionFormatError";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kEmptySet: return "EmptySet";
    case ErrorKind::kConfig: return "ConfigError";
  }
  return "Error";
}

}  // namespace outcomenorm
