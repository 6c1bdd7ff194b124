#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "outcomenorm/classifier.hpp"
#include "outcomenorm/embedding.hpp"

namespace outcomenorm {

double euclidean(const EmbeddingVector& u, const EmbeddingVector& v);

struct ClusterStats {
  std::string label;
  std::size_t member_count = 0;
  bool empty = true;             // no members: mean and distance are meaningless
  EmbeddingVector mean_vec;
  double dist_mean_to_label = 0.0;
};

/// One entry per taxonomy label, in taxonomy order. `embeddings` is parallel
/// to `classifications`.
std::vector<ClusterStats> cluster_stats(std::span<const RankedClassification> classifications,
                                        std::span<const EmbeddingVector> embeddings,
                                        const LabelEmbeddingSet& labels);

struct ClusterMember {
  std::string id;
  EmbeddingVector vec;
};

struct OutlierScore {
  std::string id;
  double distance = 0.0;

  bool operator==(const OutlierScore&) const = default;
};

/// Distance of every member to the cluster mean, descending; ties by id.
std::vector<OutlierScore> outlier_scores(std::span<const ClusterMember> members,
                                         const EmbeddingVector& mean_vec);

struct Projection {
  std::size_t components = 0;
  std::vector<std::vector<double>> coordinates;  // one row per item
  std::vector<std::vector<double>> directions;   // unit principal directions
  std::vector<double> variances;                 // descending
};

inline constexpr int kPcaMaxIterations = 1000;
inline constexpr double kPcaTolerance = 1e-10;

/// Deterministic PCA by power iteration with deflation. Each direction starts
/// from the normalized all-ones vector (falling back to the first standard
/// basis vector with a non-vanishing residual once earlier directions are
/// projected out). Components are ordered by descending variance and signed so
/// that their first nonzero coordinate is positive.
Projection pca_project(std::span<const EmbeddingVector> items, std::size_t components);

inline constexpr double kDefaultNoopThreshold = 0.5;
inline constexpr double kAttentionRowTolerance = 1e-6;

/// heads x seq x seq attention weights for one input sequence.
struct AttentionTensor {
  std::vector<std::string> tokens;
  std::vector<std::vector<std::vector<double>>> weights;
};

struct AttentionProfile {
  std::vector<std::string> tokens;
  std::vector<double> weights;  // [CLS] query row averaged over heads
  double sep_share = 0.0;
  bool noop_flag = false;
};

AttentionProfile attention_cls_profile(const AttentionTensor& attention,
                                       double noop_threshold = kDefaultNoopThreshold);

/// Accepts one {"tokens": [...], "attention": [...]} object or an array of them.
std::vector<AttentionTensor> parse_attention_json(std::string_view text);

}  // namespace outcomenorm
