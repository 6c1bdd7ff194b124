#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "outcomenorm/classifier.hpp"
#include "outcomenorm/cluster.hpp"
#include "outcomenorm/corpus.hpp"
#include "outcomenorm/embedding.hpp"
#include "outcomenorm/miner.hpp"
#include "outcomenorm/tokenizer.hpp"

namespace outcomenorm {

struct RunConfig {
  std::filesystem::path input;
  InputFormat format = InputFormat::kCsv;
  std::optional<std::string> id_column;
  std::optional<std::string> text_column;
  std::string taxonomy = "smith15";
  std::optional<std::filesystem::path> vocab;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::uint64_t> reference_seed;
  std::size_t dim = kDefaultDim;
  PoolMethod pool = PoolMethod::kMedian;
  double review_margin = kDefaultReviewMargin;
  double tau = kDefaultTau;
  std::size_t min_freq = kDefaultMinFreq;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> classification;  // defaults to out/classification.csv
  std::size_t components = 3;
  unsigned threads = 1;
  bool softmax_baseline = false;
  double noop_threshold = kDefaultNoopThreshold;

  ColumnNames columns() const;
  std::filesystem::path classification_path() const;
};

using Artifact = std::pair<std::string, std::string>;  // file name, content

// Report renderers. Numbers are fixed-point with 9 decimals.
std::string classification_csv(std::span<const RankedClassification> rows);
std::string ranking_json(const TaxonomyDef& taxonomy, std::span<const RankedClassification> rows);
std::string counts_csv(const TaxonomyDef& taxonomy, std::span<const std::size_t> counts);
std::string rejects_csv(std::span<const Reject> rejects);
std::string distances_csv(std::span<const ClusterStats> stats);
std::string projection_csv(std::span<const RankedClassification> rows, const Projection& projection);

/// outcome_id -> assigned label rows from a classification CSV.
std::vector<RankedClassification> parse_classification_csv(std::string_view text);

struct ClassifyArtifacts {
  std::vector<Artifact> files;
  std::vector<std::size_t> counts;
  std::size_t classified = 0;
  std::size_t rejected = 0;
};

struct AttentionSummary {
  std::vector<AttentionProfile> profiles;
  double noop_fraction = 0.0;
};

// Each command reads and validates all of its inputs, computes every artifact
// in memory, and only then writes them with csv::write_atomically. The
// build_* variants stop before writing.
ClassifyArtifacts build_classify(const RunConfig& config);
std::vector<Artifact> build_analyze(const RunConfig& config);
std::vector<Artifact> build_mine(const RunConfig& config);
std::vector<Artifact> build_attention(const std::filesystem::path& attention_json,
                                      double noop_threshold, AttentionSummary* summary = nullptr);
std::vector<Artifact> build_fragmentation(const RunConfig& config,
                                          FragmentationReport* report = nullptr);

ClassifyArtifacts cmd_classify(const RunConfig& config);
void cmd_analyze(const RunConfig& config);
void cmd_mine(const RunConfig& config);
AttentionSummary cmd_attention(const std::filesystem::path& attention_json, double noop_threshold,
                               const std::filesystem::path& out);
FragmentationReport cmd_fragmentation(const RunConfig& config);

}  // namespace outcomenorm
