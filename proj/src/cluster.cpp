#include "outcomenorm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "json.hpp"

#include "outcomenorm/errors.hpp"

namespace outcomenorm {

double euclidean(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) throw Error(ErrorKind::kDimension, "euclidean of mismatched dimensions");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    const double d = u[i] - v[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace {

EmbeddingVector mean_of(std::span<const EmbeddingVector* const> members) {
  std::vector<double> sum(members.front()->dim(), 0.0);
  for (const auto* m : members) {
    if (m->dim() != sum.size()) throw Error(ErrorKind::kDimension, "cluster members differ in dim");
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += (*m)[d];
  }
  for (double& s : sum) s /= static_cast<double>(members.size());
  return EmbeddingVector(std::move(sum));
}

}  // namespace

std::vector<ClusterStats> cluster_stats(std::span<const RankedClassification> classifications,
                                        std::span<const EmbeddingVector> embeddings,
                                        const LabelEmbeddingSet& labels) {
  if (classifications.size() != embeddings.size()) {
    throw Error(ErrorKind::kDimension, "every classified outcome needs an embedding");
  }
  std::vector<std::vector<const EmbeddingVector*>> members(labels.taxonomy.size());
  for (std::size_t i = 0; i < classifications.size(); ++i) {
    const auto index = labels.taxonomy.index_of(classifications[i].assigned);
    if (!index) {
      throw Error(ErrorKind::kTaxonomy, "outcome " + classifications[i].outcome_id +
                                            " assigned to unknown label '" +
                                            classifications[i].assigned + "'");
    }
    members[*index].push_back(&embeddings[i]);
  }

  std::vector<ClusterStats> stats;
  stats.reserve(members.size());
  for (std::size_t l = 0; l < members.size(); ++l) {
    ClusterStats s;
    s.label = labels.taxonomy.labels[l];
    s.member_count = members[l].size();
    s.empty = members[l].empty();
    if (!s.empty) {
      s.mean_vec = mean_of(members[l]);
      s.dist_mean_to_label = euclidean(s.mean_vec, labels.vectors[l]);
    }
    stats.push_back(std::move(s));
  }
  return stats;
}

std::vector<OutlierScore> outlier_scores(std::span<const ClusterMember> members,
                                         const EmbeddingVector& mean_vec) {
  std::vector<OutlierScore> scores;
  scores.reserve(members.size());
  for (const auto& m : members) scores.push_back({m.id, euclidean(m.vec, mean_vec)});
  std::sort(scores.begin(), scores.end(), [](const OutlierScore& a, const OutlierScore& b) {
    if (a.distance != b.distance) return a.distance > b.distance;
    return a.id < b.id;
  });
  return scores;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return n;
}

void project_out(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double c = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
  }
}

// Covariance-free product (X^T X) v over centered rows.
std::vector<double> gram_apply(const std::vector<std::vector<double>>& rows,
                               const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.0);
  for (const auto& r : rows) {
    const double s = dot(r, v);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * r[i];
  }
  return out;
}

std::vector<double> start_vector(std::size_t dim, const std::vector<std::vector<double>>& basis) {
  constexpr double kResidualFloor = 1e-8;
  std::vector<double> v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  project_out(v, basis);
  if (normalize(v) > kResidualFloor) return v;
  for (std::size_t e = 0; e < dim; ++e) {
    std::vector<double> u(dim, 0.0);
    u[e] = 1.0;
    project_out(u, basis);
    if (normalize(u) > kResidualFloor) return u;
  }
  return v;
}

}  // namespace

Projection pca_project(std::span<const EmbeddingVector> items, std::size_t components) {
  if (components == 0) throw Error(ErrorKind::kInsufficientData, "need at least one component");
  if (items.size() < components + 1) {
    throw Error(ErrorKind::kInsufficientData, "PCA with " + std::to_string(components) +
                                                  " components needs at least " +
                                                  std::to_string(components + 1) + " items, got " +
                                                  std::to_string(items.size()));
  }
  const std::size_t dim = items.front().dim();
  if (dim < components) {
    throw Error(ErrorKind::kInsufficientData, "dimension " + std::to_string(dim) +
                                                  " is below the component count");
  }

  std::vector<double> mean(dim, 0.0);
  for (const auto& item : items) {
    if (item.dim() != dim) throw Error(ErrorKind::kDimension, "PCA inputs differ in dimension");
    for (std::size_t d = 0; d < dim; ++d) mean[d] += item[d];
  }
  for (double& m : mean) m /= static_cast<double>(items.size());
  std::vector<std::vector<double>> rows(items.size(), std::vector<double>(dim));
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) rows[i][d] = items[i][d] - mean[d];
  }

  // Products below this are rounding noise from deflation, not variance.
  double total_ss = 0.0;
  for (const auto& r : rows) total_ss += dot(r, r);
  const double zero_floor = 1e-12 * total_ss;

  std::vector<std::vector<double>> directions;
  for (std::size_t c = 0; c < components; ++c) {
    std::vector<double> v = start_vector(dim, directions);
    for (int it = 0; it < kPcaMaxIterations; ++it) {
      std::vector<double> w = gram_apply(rows, v);
      project_out(w, directions);
      if (normalize(w) <= zero_floor) break;  // no variance left outside earlier directions
      double change = 0.0;
      for (std::size_t d = 0; d < dim; ++d) change += (w[d] - v[d]) * (w[d] - v[d]);
      v = std::move(w);
      if (std::sqrt(change) < kPcaTolerance) break;
    }
    directions.push_back(std::move(v));
  }

  Projection proj;
  proj.components = components;
  std::vector<std::size_t> order(components);
  std::vector<double> variances(components);
  for (std::size_t c = 0; c < components; ++c) {
    order[c] = c;
    double ss = 0.0;
    for (const auto& r : rows) {
      const double s = dot(r, directions[c]);
      ss += s * s;
    }
    variances[c] = ss / static_cast<double>(items.size());
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return variances[a] > variances[b]; });

  constexpr double kSignFloor = 1e-12;
  for (const std::size_t c : order) {
    auto dir = directions[c];
    for (const double x : dir) {
      if (std::abs(x) > kSignFloor) {
        if (x < 0.0) {
          for (double& y : dir) y = -y;
        }
        break;
      }
    }
    proj.directions.push_back(std::move(dir));
    proj.variances.push_back(variances[c]);
  }

  proj.coordinates.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<double> coords(components);
    for (std::size_t c = 0; c < components; ++c) coords[c] = dot(r, proj.directions[c]);
    proj.coordinates.push_back(std::move(coords));
  }
  return proj;
}

AttentionProfile attention_cls_profile(const AttentionTensor& attention, double noop_threshold) {
  const std::size_t seq = attention.tokens.size();
  if (attention.weights.empty()) throw Error(ErrorKind::kAttentionFormat, "no attention heads");
  for (std::size_t h = 0; h < attention.weights.size(); ++h) {
    const auto& head = attention.weights[h];
    if (head.size() != seq) {
      throw Error(ErrorKind::kDimension, "head " + std::to_string(h) + " has " +
                                             std::to_string(head.size()) + " rows for " +
                                             std::to_string(seq) + " tokens");
    }
    for (std::size_t r = 0; r < seq; ++r) {
      if (head[r].size() != seq) {
        throw Error(ErrorKind::kDimension, "head " + std::to_string(h) + " row " +
                                               std::to_string(r) + " has " +
                                               std::to_string(head[r].size()) + " columns for " +
                                               std::to_string(seq) + " tokens");
      }
      double sum = 0.0;
      for (const double w : head[r]) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
          throw Error(ErrorKind::kAttentionFormat, "head " + std::to_string(h) + " row " +
                                                       std::to_string(r) + " has a negative or non-finite weight");
        }
        sum += w;
      }
      if (std::abs(sum - 1.0) > kAttentionRowTolerance) {
        throw Error(ErrorKind::kAttentionFormat, "head " + std::to_string(h) + " row " +
                                                     std::to_string(r) + " sums to " +
                                                     std::to_string(sum));
      }
    }
  }
  if (seq == 0 || attention.tokens.front() != kClsToken) {
    throw Error(ErrorKind::kAttentionFormat, "sequence must start with [CLS]");
  }

  AttentionProfile profile;
  profile.tokens = attention.tokens;
  profile.weights.assign(seq, 0.0);
  const double heads = static_cast<double>(attention.weights.size());
  for (const auto& head : attention.weights) {
    for (std::size_t t = 0; t < seq; ++t) profile.weights[t] += head[0][t];
  }
  for (std::size_t t = 0; t < seq; ++t) {
    profile.weights[t] /= heads;
    if (attention.tokens[t] == kSepToken) profile.sep_share += profile.weights[t];
  }
  profile.sep_share = std::clamp(profile.sep_share, 0.0, 1.0);
  profile.noop_flag = profile.sep_share > noop_threshold;
  return profile;
}

namespace {

AttentionTensor tensor_from_json(const nlohmann::json& doc, std::size_t index) {
  const std::string where = "sequence " + std::to_string(index) + ": ";
  if (!doc.is_object() || !doc.contains("tokens") || !doc.contains("attention")) {
    throw Error(ErrorKind::kAttentionFormat, where + "expected keys 'tokens' and 'attention'");
  }
  AttentionTensor t;
  try {
    t.tokens = doc.at("tokens").get<std::vector<std::string>>();
    t.weights = doc.at("attention").get<std::vector<std::vector<std::vector<double>>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kAttentionFormat, where + "attention must be heads x seq x seq numbers (" +
                                                 e.what() + ")");
  }
  return t;
}

}  // namespace

std::vector<AttentionTensor> parse_attention_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kAttentionFormat, std::string("invalid JSON: ") + e.what());
  }
  std::vector<AttentionTensor> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(tensor_from_json(doc[i], i));
  } else {
    out.push_back(tensor_from_json(doc, 0));
  }
  return out;
}

}  // namespace outcomenorm
