#include "outcomenorm/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "outcomenorm/csv.hpp"
#include "outcomenorm/errors.hpp"

namespace outcomenorm {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::kDimension, "embedding dimension must be positive");
  for (const double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kStoreFormat, "non-finite embedding value");
  }
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (const double v : values_) sum += v * v;
  return std::sqrt(sum);
}

EmbeddingVector EmbeddingVector::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return EmbeddingVector(std::move(out));
}

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorKind::kDimension, "store dimension must be positive");
}

void EmbeddingStore::insert(std::string key, EmbeddingVector vec) {
  if (vec.dim() != dim_) {
    throw Error(ErrorKind::kStoreFormat, "key '" + key + "' has " + std::to_string(vec.dim()) +
                                             " values, expected " + std::to_string(dim_));
  }
  if (key.empty() || key.find('\t') != std::string::npos) {
    throw Error(ErrorKind::kStoreFormat, "illegal key '" + key + "'");
  }
  if (entries_.contains(key)) throw Error(ErrorKind::kStoreFormat, "duplicate key '" + key + "'");
  keys_.push_back(key);
  entries_.emplace(std::move(key), std::move(vec));
}

const EmbeddingVector* EmbeddingStore::find(std::string_view key) const {
  const auto it = entries_.find(std::string(key));
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::kStoreFormat,
                "line " + std::to_string(line) + ": non-numeric field '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

EmbeddingStore parse_store(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw Error(ErrorKind::kStoreFormat, "missing header line");

  const auto header = split_tabs(lines.front());
  if (header.size() != 4 || header[0] != "dim" || header[2] != "n") {
    throw Error(ErrorKind::kStoreFormat, "header must be 'dim<TAB>D<TAB>n<TAB>N'");
  }
  const auto dim = parse_number<std::size_t>(header[1], 1);
  const auto count = parse_number<std::size_t>(header[3], 1);
  if (dim == 0) throw Error(ErrorKind::kStoreFormat, "dim must be positive");

  EmbeddingStore store(dim);
  std::size_t rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != dim + 1) {
      throw Error(ErrorKind::kStoreFormat, "line " + std::to_string(i + 1) + ": expected " +
                                               std::to_string(dim) + " values, found " +
                                               std::to_string(fields.size() - 1));
    }
    std::vector<double> values;
    values.reserve(dim);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      values.push_back(parse_number<double>(fields[f], i + 1));
    }
    try {
      store.insert(std::string(fields[0]), EmbeddingVector(std::move(values)));
    } catch (const Error& e) {
      throw Error(ErrorKind::kStoreFormat, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    ++rows;
  }
  if (rows != count) {
    throw Error(ErrorKind::kStoreFormat, "header declares " + std::to_string(count) +
                                             " entries, found " + std::to_string(rows));
  }
  return store;
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  return parse_store(csv::read_file(path));
}

std::string format_store(const EmbeddingStore& store) {
  std::string out = "dim\t" + std::to_string(store.dim()) + "\tn\t" + std::to_string(store.size()) + "\n";
  for (const auto& key : store.keys()) {
    out += key;
    for (const double v : store.find(key)->values()) {
      out += '\t';
      out += csv::format_general(v, 9);
    }
    out += '\n';
  }
  return out;
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EmbeddingVector reference_embed(std::int64_t token_id, std::uint64_t seed, std::size_t dim) {
  if (dim == 0) throw Error(ErrorKind::kDimension, "reference embedding dimension must be positive");
  std::uint64_t state = seed ^ (static_cast<std::uint64_t>(token_id) * 0x9E3779B97F4A7C15ULL);
  std::vector<double> values(dim);
  double sum = 0.0;
  for (double& v : values) {
    // Top 53 bits keep u / 2^63 exact in a double and the result inside [-1, 1).
    const std::uint64_t u = splitmix64_next(state) >> 11;
    v = static_cast<double>(u) * 0x1p-52 - 1.0;
    sum += v * v;
  }
  if (sum == 0.0) throw Error(ErrorKind::kZeroVector, "reference draw was all zeros");
  const double norm = std::sqrt(sum);
  for (double& v : values) v /= norm;
  return EmbeddingVector(std::move(values));
}

PoolMethod parse_pool_method(std::string_view name) {
  if (name == "median") return PoolMethod::kMedian;
  if (name == "mean") return PoolMethod::kMean;
  throw Error(ErrorKind::kConfig, "unknown pooling method '" + std::string(name) + "'");
}

EmbeddingVector pool(std::span<const EmbeddingVector> vectors, PoolMethod method) {
  if (vectors.empty()) throw Error(ErrorKind::kEmptyPool, "no vectors to pool");
  const std::size_t dim = vectors.front().dim();
  for (const auto& v : vectors) {
    if (v.dim() != dim) throw Error(ErrorKind::kDimension, "mixed dimensions in pool");
  }
  const std::size_t n = vectors.size();
  std::vector<double> out(dim);
  if (method == PoolMethod::kMean) {
    for (std::size_t d = 0; d < dim; ++d) {
      double sum = 0.0;
      for (const auto& v : vectors) sum += v[d];
      out[d] = sum / static_cast<double>(n);
    }
    return EmbeddingVector(std::move(out));
  }

  std::vector<double> column(n);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < n; ++i) column[i] = vectors[i][d];
    std::sort(column.begin(), column.end());
    out[d] = n % 2 == 1 ? column[n / 2] : (column[n / 2 - 1] + column[n / 2]) / 2.0;
  }
  return EmbeddingVector(std::move(out));
}

std::size_t EmbeddingProvider::dim() const {
  if (store != nullptr) return store->dim();
  if (reference) return reference->dim;
  throw Error(ErrorKind::kConfig, "embedding provider has neither a store nor a reference embedder");
}

EmbeddingVector piece_embedding(std::string_view piece, TokenId id, const EmbeddingProvider& provider) {
  if (provider.store != nullptr) {
    if (const auto* hit = provider.store->find(piece)) return *hit;
  }
  if (!provider.reference) throw Error(ErrorKind::kMissingEmbedding, std::string(piece));
  return reference_embed(id, provider.reference->seed, provider.reference->dim);
}

EmbeddingVector embed_tokens(const TokenSequence& tokens, const EmbeddingProvider& provider,
                             PoolMethod method, bool include_specials) {
  std::vector<EmbeddingVector> piece_vectors;
  piece_vectors.reserve(tokens.pieces.size());
  for (std::size_t i = 0; i < tokens.pieces.size(); ++i) {
    if (tokens.specials_mask[i] && !include_specials) continue;
    piece_vectors.push_back(piece_embedding(tokens.pieces[i], tokens.ids[i], provider));
  }
  if (piece_vectors.empty()) throw Error(ErrorKind::kEmptyPool, "no pieces to pool");
  return pool(piece_vectors, method);
}

EmbeddingVector embed_text(std::string_view text, const Vocabulary* vocab,
                           const EmbeddingProvider& provider, PoolMethod method) {
  if (text.empty()) throw Error(ErrorKind::kEmptyOutcome, "cannot embed empty text");
  if (provider.store != nullptr) {
    if (const auto* hit = provider.store->find(text)) return *hit;
  }
  if (vocab == nullptr) {
    throw Error(ErrorKind::kMissingEmbedding,
                std::string(text) + " (no full-text entry and no vocabulary to split it)");
  }
  return embed_tokens(tokenize(text, *vocab, false), provider, method);
}

}  // namespace outcomenorm
