#include "outcomenorm/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <thread>

#include "outcomenorm/errors.hpp"

namespace outcomenorm {

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw Error(ErrorKind::kDimension, "cosine of " + std::to_string(u.dim()) + "-dim and " +
                                           std::to_string(v.dim()) + "-dim vectors");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorKind::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

LabelEmbeddingSet embed_labels(const TaxonomyDef& taxonomy, const Vocabulary* vocab,
                               const EmbeddingProvider& provider, PoolMethod method) {
  LabelEmbeddingSet set{taxonomy, {}};
  set.vectors.reserve(taxonomy.size());
  for (const auto& label : taxonomy.labels) {
    auto vec = embed_text(label, vocab, provider, method);
    if (vec.norm() == 0.0) {
      throw Error(ErrorKind::kZeroVector, "label '" + label + "' embeds to the zero vector");
    }
    set.vectors.push_back(std::move(vec));
  }
  return set;
}

RankedClassification rank_labels(const EmbeddingVector& outcome, const LabelEmbeddingSet& labels) {
  RankedClassification out;
  out.ranked.reserve(labels.vectors.size());
  for (std::size_t i = 0; i < labels.vectors.size(); ++i) {
    out.ranked.push_back({i, labels.taxonomy.labels[i], cosine(outcome, labels.vectors[i])});
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const LabelScore& a, const LabelScore& b) { return a.similarity > b.similarity; });
  return out;
}

void assign(RankedClassification& ranked, double review_margin) {
  if (ranked.ranked.empty()) return;
  ranked.assigned = ranked.ranked.front().label;
  ranked.margin = ranked.ranked.size() > 1
                      ? ranked.ranked[0].similarity - ranked.ranked[1].similarity
                      : 0.0;
  ranked.needs_review = ranked.margin < review_margin;
}

SoftmaxResult softmax_head(const EmbeddingVector& pooled, const DenseMatrix& weights,
                           std::span<const double> bias) {
  if (weights.rows != pooled.dim() || weights.cols != bias.size() ||
      weights.data.size() != weights.rows * weights.cols || bias.empty()) {
    throw Error(ErrorKind::kDimension, "softmax head shape does not match input");
  }
  std::vector<double> logits(bias.begin(), bias.end());
  for (std::size_t d = 0; d < weights.rows; ++d) {
    const double x = pooled[d];
    for (std::size_t l = 0; l < weights.cols; ++l) logits[l] += weights.at(d, l) * x;
  }
  SoftmaxResult result;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  result.probabilities.resize(logits.size());
  for (std::size_t l = 0; l < logits.size(); ++l) {
    result.probabilities[l] = std::exp(logits[l] - top);
    total += result.probabilities[l];
  }
  for (double& p : result.probabilities) p /= total;
  result.argmax = static_cast<std::size_t>(
      std::max_element(result.probabilities.begin(), result.probabilities.end()) -
      result.probabilities.begin());
  return result;
}

SoftmaxHead random_softmax_head(std::size_t dim, std::size_t labels, std::uint64_t seed,
                                double stddev) {
  SoftmaxHead head;
  head.weights = DenseMatrix{dim, labels, std::vector<double>(dim * labels)};
  head.bias.assign(labels, 0.0);
  std::uint64_t state = seed;
  auto uniform_open = [&] {
    // (0, 1]: never zero, so the logarithm below is finite.
    return (static_cast<double>(splitmix64_next(state) >> 11) + 1.0) * 0x1p-53;
  };
  for (std::size_t i = 0; i < head.weights.data.size(); i += 2) {
    const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
    const double angle = 2.0 * std::numbers::pi * uniform_open();
    head.weights.data[i] = stddev * radius * std::cos(angle);
    if (i + 1 < head.weights.data.size()) head.weights.data[i + 1] = stddev * radius * std::sin(angle);
  }
  return head;
}

std::vector<std::size_t> softmax_baseline_counts(std::span<const OutcomeRecord> outcomes,
                                                 const Vocabulary& vocab,
                                                 const EmbeddingProvider& provider,
                                                 const SoftmaxHead& head, HeadInput input,
                                                 PoolMethod method) {
  std::vector<std::size_t> counts(head.bias.size(), 0);
  for (const auto& outcome : outcomes) {
    const auto tokens = tokenize(outcome.normalized_text, vocab, true);
    const auto features = input == HeadInput::kClsPosition
                              ? piece_embedding(tokens.pieces.front(), tokens.ids.front(), provider)
                              : embed_tokens(tokens, provider, method, /*include_specials=*/true);
    ++counts[softmax_head(features, head.weights, head.bias).argmax];
  }
  return counts;
}

namespace {

struct Slot {
  std::optional<RankedClassification> ranked;
  std::optional<EmbeddingVector> embedding;
  std::string error;
};

Slot classify_one(const OutcomeRecord& outcome, const LabelEmbeddingSet& labels,
                  const Vocabulary* vocab, const EmbeddingProvider& provider,
                  const ClassifyOptions& options) {
  Slot slot;
  try {
    auto vec = embed_text(outcome.normalized_text, vocab, provider, options.pool);
    auto ranked = rank_labels(vec, labels);
    ranked.outcome_id = outcome.id;
    assign(ranked, options.review_margin);
    slot.ranked = std::move(ranked);
    if (options.keep_embeddings) slot.embedding = std::move(vec);
  } catch (const Error& e) {
    slot.error = e.what();
  }
  return slot;
}

}  // namespace

CorpusClassification classify_corpus(std::span<const OutcomeRecord> outcomes,
                                     const LabelEmbeddingSet& labels, const Vocabulary* vocab,
                                     const EmbeddingProvider& provider,
                                     const ClassifyOptions& options) {
  if (outcomes.empty()) throw Error(ErrorKind::kEmptyCorpus, "no outcomes");

  std::vector<Slot> slots(outcomes.size());
  const std::size_t workers =
      std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(outcomes.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      slots[i] = classify_one(outcomes[i], labels, vocab, provider, options);
    }
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (outcomes.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(outcomes.size(), begin + chunk);
        for (std::size_t i = begin; i < end; ++i) {
          slots[i] = classify_one(outcomes[i], labels, vocab, provider, options);
        }
      });
    }
  }

  CorpusClassification result;
  result.counts.assign(labels.taxonomy.size(), 0);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& slot = slots[i];
    if (!slot.ranked) {
      result.rejects.push_back({outcomes[i].id, outcomes[i].line, std::move(slot.error)});
      continue;
    }
    ++result.counts[slot.ranked->ranked.front().label_index];
    result.classifications.push_back(std::move(*slot.ranked));
    if (slot.embedding) result.embeddings.push_back(std::move(*slot.embedding));
  }
  return result;
}

}  // namespace outcomenorm
