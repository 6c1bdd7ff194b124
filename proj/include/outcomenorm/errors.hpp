#pragma once

#include <stdexcept>
#include <string>

namespace outcomenorm {

enum class ErrorKind {
  kEmptyOutcome,
  kSchema,
  kIo,
  kTaxonomy,
  kVocab,
  kStoreFormat,
  kDimension,
  kZeroVector,
  kEmptyPool,
  kMissingEmbedding,
  kEmptyCorpus,
  kAttentionFormat,
  kInsufficientData,
  kEmptySet,
  kConfig,
};

const char* error_kind_name(ErrorKind kind);

// Every library failure is reported through this one exception type; the
// kind distinguishes the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace outcomenorm
