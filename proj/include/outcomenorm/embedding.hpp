#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "outcomenorm/tokenizer.hpp"

namespace outcomenorm {

inline constexpr std::size_t kDefaultDim = 1024;

/// Fixed-dimension vector of finite reals.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  /// Throws DimensionError when empty and StoreFormatError on non-finite values.
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double norm() const;
  EmbeddingVector scaled(double factor) const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }

  /// Throws StoreFormatError on duplicate keys, tab-bearing keys or dim mismatch.
  void insert(std::string key, EmbeddingVector vec);
  const EmbeddingVector* find(std::string_view key) const;
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::size_t dim_;
  std::vector<std::string> keys_;  // insertion order
  std::unordered_map<std::string, EmbeddingVector> entries_;
};

/// Store file: `dim<TAB>D<TAB>n<TAB>N` followed by N rows `key<TAB>v1...vD`.
EmbeddingStore parse_store(std::string_view text);
EmbeddingStore load_store(const std::filesystem::path& path);
std::string format_store(const EmbeddingStore& store);

/// splitmix64 step; advances `state` and returns the mixed output.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// Deterministic unit-norm stand-in for an encoder output of `token_id`.
EmbeddingVector reference_embed(std::int64_t token_id, std::uint64_t seed, std::size_t dim);

enum class PoolMethod { kMedian, kMean };

PoolMethod parse_pool_method(std::string_view name);

/// Coordinate-wise median (even count: mean of the middle pair) or mean.
EmbeddingVector pool(std::span<const EmbeddingVector> vectors, PoolMethod method);

struct ReferenceEmbedder {
  std::uint64_t seed = 0;
  std::size_t dim = kDefaultDim;
};

/// Where vectors come from. A store is consulted first (full text, then
/// pieces); the reference embedder, when present, covers pieces the store
/// lacks. With neither able to answer, embedding fails with MissingEmbedding.
struct EmbeddingProvider {
  const EmbeddingStore* store = nullptr;
  std::optional<ReferenceEmbedder> reference;

  std::size_t dim() const;
};

/// Vector for a single vocabulary piece: store entry first, then the
/// reference embedder.
EmbeddingVector piece_embedding(std::string_view piece, TokenId id, const EmbeddingProvider& provider);

/// Sentence vector for normalized text. Special tokens never contribute.
/// `vocab` may be null when every text is a full-text store key.
EmbeddingVector embed_text(std::string_view text, const Vocabulary* vocab,
                           const EmbeddingProvider& provider,
                           PoolMethod method = PoolMethod::kMedian);

/// Pools piece vectors of an already tokenized sequence. Positions flagged in
/// specials_mask are skipped unless `include_specials` is set.
EmbeddingVector embed_tokens(const TokenSequence& tokens, const EmbeddingProvider& provider,
                             PoolMethod method, bool include_specials = false);

}  // namespace outcomenorm
