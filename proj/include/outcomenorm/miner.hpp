#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "outcomenorm/classifier.hpp"
#include "outcomenorm/corpus.hpp"

namespace outcomenorm {

inline constexpr double kDefaultTau = 0.5;
inline constexpr std::size_t kDefaultMinFreq = 2;

using TokenSet = std::set<std::string, std::less<>>;

/// Space-separated tokens of normalized text, duplicates collapsed.
TokenSet token_set(std::string_view normalized_text);

/// |a ∩ b| / |a ∪ b|. Throws EmptySet if either side is empty.
double jaccard(const TokenSet& a, const TokenSet& b);

/// Symmetric matrix with a unit diagonal, rows in input order.
std::vector<std::vector<double>> pairwise_jaccard(std::span<const std::string> texts);

/// Connected components of the graph joining texts whose Jaccard is >= tau.
/// Components list member indices ascending and are ordered by first member.
std::vector<std::vector<std::size_t>> single_link_groups(std::span<const std::string> texts,
                                                         double tau);

struct CoreOutcomeCandidate {
  std::string label;
  std::vector<std::string> member_ids;  // sorted
  std::string representative_text;
  std::size_t group_size = 0;  // distinct normalized texts
  double group_min_jaccard = 1.0;
  std::size_t frequency = 0;  // total occurrences

  bool operator==(const CoreOutcomeCandidate&) const = default;
};

struct MiningResult {
  std::vector<CoreOutcomeCandidate> candidates;  // taxonomy order, then ranking order
  // Frequent single-link components whose weakest pair fell below tau through
  // chaining. Kept for audit, never emitted as candidates.
  std::vector<CoreOutcomeCandidate> chained;
};

struct MineOptions {
  double tau = kDefaultTau;
  std::size_t min_freq = kDefaultMinFreq;
};

/// Per label: dedupe identical texts, group by single link at tau, keep groups
/// with frequency >= min_freq, ranked by group_min_jaccard desc, frequency desc,
/// then representative_text.
MiningResult mine_candidates(std::span<const RankedClassification> classifications,
                             std::span<const OutcomeRecord> outcomes, const TaxonomyDef& taxonomy,
                             const MineOptions& options = {});

std::string candidates_csv(std::span<const CoreOutcomeCandidate> candidates);

}  // namespace outcomenorm
