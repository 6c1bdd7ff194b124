#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "outcomenorm/corpus.hpp"
#include "outcomenorm/embedding.hpp"
#include "outcomenorm/tokenizer.hpp"

namespace outcomenorm {

inline constexpr double kDefaultReviewMargin = 0.005;

/// Cosine similarity clamped to [-1, 1].
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct LabelEmbeddingSet {
  TaxonomyDef taxonomy;
  std::vector<EmbeddingVector> vectors;  // parallel to taxonomy.labels
};

/// Embeds every label string. Throws ZeroVector for a degenerate label vector.
LabelEmbeddingSet embed_labels(const TaxonomyDef& taxonomy, const Vocabulary* vocab,
                               const EmbeddingProvider& provider,
                               PoolMethod method = PoolMethod::kMedian);

struct LabelScore {
  std::size_t label_index = 0;
  std::string label;
  double similarity = 0.0;

  bool operator==(const LabelScore&) const = default;
};

struct RankedClassification {
  std::string outcome_id;
  std::vector<LabelScore> ranked;  // descending similarity, ties by label order
  std::string assigned;
  double margin = 0.0;
  bool needs_review = false;

  bool operator==(const RankedClassification&) const = default;
};

/// Ranks all labels; the assignment fields are left for assign().
RankedClassification rank_labels(const EmbeddingVector& outcome, const LabelEmbeddingSet& labels);

void assign(RankedClassification& ranked, double review_margin = kDefaultReviewMargin);

/// Row-major dim x labels matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

struct SoftmaxHead {
  DenseMatrix weights;  // dim x labels
  std::vector<double> bias;
};

struct SoftmaxResult {
  std::vector<double> probabilities;
  std::size_t argmax = 0;  // first maximum
};

SoftmaxResult softmax_head(const EmbeddingVector& pooled, const DenseMatrix& weights,
                           std::span<const double> bias);

/// Untrained head in the usual transformer initialisation: weights drawn from
/// N(0, stddev^2) with a splitmix64-driven Box-Muller sampler, zero bias.
SoftmaxHead random_softmax_head(std::size_t dim, std::size_t labels, std::uint64_t seed,
                                double stddev = 0.02);

/// What the baseline head reads. kClsPosition is the usual sequence
/// classification input: the vector in the [CLS] slot. kPooledSequence pools
/// every position, specials included.
enum class HeadInput { kClsPosition, kPooledSequence };

/// Counts per label (taxonomy order) assigned by the untrained head.
std::vector<std::size_t> softmax_baseline_counts(std::span<const OutcomeRecord> outcomes,
                                                 const Vocabulary& vocab,
                                                 const EmbeddingProvider& provider,
                                                 const SoftmaxHead& head,
                                                 HeadInput input = HeadInput::kClsPosition,
                                                 PoolMethod method = PoolMethod::kMedian);

struct ClassificationReject {
  std::string outcome_id;
  std::size_t line = 0;
  std::string reason;
};

struct ClassifyOptions {
  PoolMethod pool = PoolMethod::kMedian;
  double review_margin = kDefaultReviewMargin;
  unsigned threads = 1;
  bool keep_embeddings = false;
};

struct CorpusClassification {
  std::vector<RankedClassification> classifications;  // input order, rejects omitted
  std::vector<EmbeddingVector> embeddings;            // parallel, when requested
  std::vector<std::size_t> counts;                    // taxonomy order
  std::vector<ClassificationReject> rejects;
};

/// Classifies every outcome exactly once. Outcomes that cannot be embedded are
/// reported in `rejects` and never counted. Output is independent of `threads`.
CorpusClassification classify_corpus(std::span<const OutcomeRecord> outcomes,
                                     const LabelEmbeddingSet& labels, const Vocabulary* vocab,
                                     const EmbeddingProvider& provider,
                                     const ClassifyOptions& options = {});

}  // namespace outcomenorm
