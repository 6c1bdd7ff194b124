#include "outcomenorm/pipeline.hpp"

#include <algorithm>
#include <memory>
#include <unordered_map>

#include "json.hpp"
#include "outcomenorm/csv.hpp"
#include "outcomenorm/errors.hpp"

namespace outcomenorm {

namespace fs = std::filesystem;

ColumnNames RunConfig::columns() const {
  ColumnNames names = ColumnNames::defaults_for(format);
  if (id_column) names.id = *id_column;
  if (text_column) names.text = *text_column;
  return names;
}

fs::path RunConfig::classification_path() const {
  return classification ? *classification : out / "classification.csv";
}

namespace {

constexpr int kDecimals = 9;

// Re-throws a module error with the stage that raised it prefixed.
template <typename F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  }
}

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::kIo, std::string(what) + " not found: " + path.string());
  }
}

// Everything a classify or analyze run needs, loaded and validated up front.
struct Resources {
  LoadedCorpus corpus;
  TaxonomyDef taxonomy;
  std::optional<Vocabulary> vocab;
  std::unique_ptr<EmbeddingStore> store;
  EmbeddingProvider provider;

  const Vocabulary* vocab_ptr() const { return vocab ? &*vocab : nullptr; }
};

LoadedCorpus load_corpus(const RunConfig& config) {
  require_file(config.input, "input");
  auto corpus = in_stage("corpus_ingest/load_outcomes", [&] {
    return load_outcomes(config.input, config.format, config.columns());
  });
  if (corpus.records.empty()) {
    throw Error(ErrorKind::kEmptyCorpus, "corpus_ingest/load_outcomes: no outcomes in " +
                                             config.input.string());
  }
  return corpus;
}

Resources load_resources(const RunConfig& config, bool need_embeddings) {
  Resources r;
  if (need_embeddings) {
    if (config.embeddings.has_value() == config.reference_seed.has_value()) {
      throw Error(ErrorKind::kConfig, "choose exactly one of --embeddings and --reference-seed");
    }
    if (config.reference_seed && !config.vocab) {
      throw Error(ErrorKind::kConfig, "--reference-seed needs --vocab to split text into pieces");
    }
    if (config.dim == 0) throw Error(ErrorKind::kConfig, "--dim must be positive");
    if (config.vocab) require_file(*config.vocab, "vocabulary");
    if (config.embeddings) require_file(*config.embeddings, "embedding store");
  }
  r.corpus = load_corpus(config);
  r.taxonomy = in_stage("corpus_ingest/load_taxonomy", [&] { return load_taxonomy(config.taxonomy); });
  if (!need_embeddings) return r;

  if (config.vocab) {
    r.vocab = in_stage("tokenizer/load_vocab", [&] { return load_vocab(*config.vocab); });
  }
  if (config.embeddings) {
    r.store = std::make_unique<EmbeddingStore>(
        in_stage("embedding/load_store", [&] { return load_store(*config.embeddings); }));
    r.provider.store = r.store.get();
  } else {
    r.provider.reference = ReferenceEmbedder{*config.reference_seed, config.dim};
  }
  return r;
}

std::string sim_field(const RankedClassification& row, std::size_t rank, bool label) {
  if (rank >= row.ranked.size()) return "";
  return label ? row.ranked[rank].label : csv::format_fixed(row.ranked[rank].similarity, kDecimals);
}

std::vector<RankedClassification> load_classification(const RunConfig& config) {
  const fs::path path = config.classification_path();
  require_file(path, "classification file");
  return in_stage("cli_reports/read_classification",
                  [&] { return parse_classification_csv(csv::read_file(path)); });
}

}  // namespace

std::string classification_csv(std::span<const RankedClassification> rows) {
  std::string out =
      "outcome_id,assigned,margin,needs_review,rank1_label,rank1_sim,rank2_label,rank2_sim,"
      "rank3_sim_label,rank3_sim\n";
  for (const auto& row : rows) {
    out += csv::join({row.outcome_id, row.assigned, csv::format_fixed(row.margin, kDecimals),
                      row.needs_review ? "true" : "false", sim_field(row, 0, true),
                      sim_field(row, 0, false), sim_field(row, 1, true), sim_field(row, 1, false),
                      sim_field(row, 2, true), sim_field(row, 2, false)});
    out += '\n';
  }
  return out;
}

std::string ranking_json(const TaxonomyDef& taxonomy, std::span<const RankedClassification> rows) {
  nlohmann::json doc;
  doc["taxonomy"] = taxonomy.name;
  doc["labels"] = taxonomy.labels;
  auto& outcomes = doc["outcomes"] = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& s : row.ranked) ranking.push_back({{"label", s.label}, {"similarity", s.similarity}});
    outcomes.push_back({{"outcome_id", row.outcome_id}, {"ranking", std::move(ranking)}});
  }
  return doc.dump(1) + "\n";
}

std::string counts_csv(const TaxonomyDef& taxonomy, std::span<const std::size_t> counts) {
  std::string out = "label,count\n";
  for (std::size_t i = 0; i < taxonomy.size(); ++i) {
    out += csv::join({taxonomy.labels[i], std::to_string(counts[i])});
    out += '\n';
  }
  return out;
}

std::string rejects_csv(std::span<const Reject> rejects) {
  std::string out = "line,reason\n";
  for (const auto& r : rejects) {
    out += csv::join({std::to_string(r.line), r.reason});
    out += '\n';
  }
  return out;
}

std::string distances_csv(std::span<const ClusterStats> stats) {
  std::string out = "label,count,dist_mean_to_label\n";
  for (const auto& s : stats) {
    if (s.empty) continue;
    out += csv::join({s.label, std::to_string(s.member_count),
                      csv::format_fixed(s.dist_mean_to_label, kDecimals)});
    out += '\n';
  }
  return out;
}

std::string projection_csv(std::span<const RankedClassification> rows, const Projection& projection) {
  static constexpr const char* kAxes[] = {"x", "y", "z"};
  std::string out = "id";
  for (std::size_t c = 0; c < projection.components; ++c) {
    out += ',';
    out += c < 3 ? kAxes[c] : "c" + std::to_string(c + 1);
  }
  out += ",assigned_label\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> fields{rows[i].outcome_id};
    for (const double x : projection.coordinates[i]) fields.push_back(csv::format_fixed(x, kDecimals));
    fields.push_back(rows[i].assigned);
    out += csv::join(fields);
    out += '\n';
  }
  return out;
}

std::vector<RankedClassification> parse_classification_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::kSchema, "classification file has no header");
  const auto& header = rows.front().fields;
  auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorKind::kSchema, "classification file lacks column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = column("outcome_id");
  const std::size_t assigned_col = column("assigned");
  std::vector<RankedClassification> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != header.size()) {
      throw Error(ErrorKind::kSchema, "classification line " + std::to_string(rows[r].line) +
                                          " has " + std::to_string(f.size()) + " fields");
    }
    RankedClassification c;
    c.outcome_id = f[id_col];
    c.assigned = f[assigned_col];
    out.push_back(std::move(c));
  }
  return out;
}

ClassifyArtifacts build_classify(const RunConfig& config) {
  const Resources r = load_resources(config, true);
  const auto labels = in_stage("taxonomy_classifier/embed_labels", [&] {
    return embed_labels(r.taxonomy, r.vocab_ptr(), r.provider, config.pool);
  });
  ClassifyOptions options;
  options.pool = config.pool;
  options.review_margin = config.review_margin;
  options.threads = config.threads;
  const auto result = in_stage("taxonomy_classifier/classify_corpus", [&] {
    return classify_corpus(r.corpus.records, labels, r.vocab_ptr(), r.provider, options);
  });
  if (result.classifications.empty()) {
    throw Error(ErrorKind::kEmptyCorpus,
                "taxonomy_classifier/classify_corpus: no outcomes could be embedded (first: " +
                    result.rejects.front().reason + ")");
  }

  std::vector<Reject> rejects = r.corpus.rejects;
  for (const auto& rej : result.rejects) {
    rejects.push_back({rej.line, "outcome " + rej.outcome_id + ": " + rej.reason});
  }
  std::stable_sort(rejects.begin(), rejects.end(),
                   [](const Reject& a, const Reject& b) { return a.line < b.line; });

  ClassifyArtifacts artifacts;
  artifacts.counts = result.counts;
  artifacts.classified = result.classifications.size();
  artifacts.rejected = rejects.size();
  artifacts.files = {
      {"classification.csv", classification_csv(result.classifications)},
      {"counts.csv", counts_csv(r.taxonomy, result.counts)},
      {"rejects.csv", rejects_csv(rejects)},
      {"ranking.json", ranking_json(r.taxonomy, result.classifications)},
  };

  if (config.softmax_baseline) {
    if (!r.vocab) throw Error(ErrorKind::kConfig, "--softmax-baseline needs --vocab");
    const std::uint64_t seed = config.reference_seed.value_or(0);
    const auto head = random_softmax_head(r.provider.dim(), r.taxonomy.size(), seed);
    std::vector<OutcomeRecord> embedded;
    std::unordered_map<std::string_view, bool> ok;
    for (const auto& c : result.classifications) ok[c.outcome_id] = true;
    for (const auto& rec : r.corpus.records) {
      if (ok.contains(rec.id)) embedded.push_back(rec);
    }
    const auto counts = in_stage("taxonomy_classifier/softmax_head", [&] {
      return softmax_baseline_counts(embedded, *r.vocab, r.provider, head, HeadInput::kClsPosition,
                                     config.pool);
    });
    artifacts.files.emplace_back("softmax_counts.csv", counts_csv(r.taxonomy, counts));
  }
  return artifacts;
}

std::vector<Artifact> build_analyze(const RunConfig& config) {
  auto classified = load_classification(config);
  const Resources r = load_resources(config, true);
  const auto labels = in_stage("taxonomy_classifier/embed_labels", [&] {
    return embed_labels(r.taxonomy, r.vocab_ptr(), r.provider, config.pool);
  });

  std::unordered_map<std::string_view, const OutcomeRecord*> by_id;
  for (const auto& rec : r.corpus.records) by_id.emplace(rec.id, &rec);
  std::vector<EmbeddingVector> embeddings;
  embeddings.reserve(classified.size());
  for (const auto& c : classified) {
    const auto it = by_id.find(c.outcome_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kSchema, "cli_reports/analyze: classified outcome " + c.outcome_id +
                                          " is not in " + config.input.string());
    }
    embeddings.push_back(in_stage("embedding/embed_text: outcome " + c.outcome_id, [&] {
      return embed_text(it->second->normalized_text, r.vocab_ptr(), r.provider, config.pool);
    }));
  }

  const auto stats = in_stage("cluster_analysis/cluster_stats",
                              [&] { return cluster_stats(classified, embeddings, labels); });

  std::string outliers = "label,outcome_id,distance\n";
  for (const auto& s : stats) {
    if (s.empty) continue;
    std::vector<ClusterMember> members;
    for (std::size_t i = 0; i < classified.size(); ++i) {
      if (classified[i].assigned == s.label) members.push_back({classified[i].outcome_id, embeddings[i]});
    }
    for (const auto& o : outlier_scores(members, s.mean_vec)) {
      outliers += csv::join({s.label, o.id, csv::format_fixed(o.distance, kDecimals)});
      outliers += '\n';
    }
  }

  const auto projection = in_stage("cluster_analysis/pca_project",
                                   [&] { return pca_project(embeddings, config.components); });
  return {
      {"distances.csv", distances_csv(stats)},
      {"outliers.csv", outliers},
      {"projection.csv", projection_csv(classified, projection)},
  };
}

std::vector<Artifact> build_mine(const RunConfig& config) {
  auto classified = load_classification(config);
  const Resources r = load_resources(config, false);
  MineOptions options{config.tau, config.min_freq};
  const auto mined = in_stage("core_outcome_miner/mine_candidates", [&] {
    return mine_candidates(classified, r.corpus.records, r.taxonomy, options);
  });
  return {
      {"candidates.csv", candidates_csv(mined.candidates)},
      {"chained_groups.csv", candidates_csv(mined.chained)},
  };
}

std::vector<Artifact> build_attention(const fs::path& attention_json, double noop_threshold,
                                      AttentionSummary* summary) {
  require_file(attention_json, "attention file");
  const auto tensors = in_stage("cluster_analysis/parse_attention",
                                [&] { return parse_attention_json(csv::read_file(attention_json)); });
  if (tensors.empty()) throw Error(ErrorKind::kAttentionFormat, "attention file holds no sequences");

  AttentionSummary local;
  std::string profile = "sequence,position,token,weight,is_sep\n";
  std::string table = "sequence,sep_share,noop_flag\n";
  std::size_t noops = 0;
  for (std::size_t s = 0; s < tensors.size(); ++s) {
    auto p = in_stage("cluster_analysis/attention_cls_profile: sequence " + std::to_string(s),
                      [&] { return attention_cls_profile(tensors[s], noop_threshold); });
    for (std::size_t t = 0; t < p.tokens.size(); ++t) {
      profile += csv::join({std::to_string(s), std::to_string(t), p.tokens[t],
                            csv::format_fixed(p.weights[t], kDecimals),
                            p.tokens[t] == kSepToken ? "true" : "false"});
      profile += '\n';
    }
    table += csv::join({std::to_string(s), csv::format_fixed(p.sep_share, kDecimals),
                        p.noop_flag ? "true" : "false"});
    table += '\n';
    if (p.noop_flag) ++noops;
    local.profiles.push_back(std::move(p));
  }
  local.noop_fraction = static_cast<double>(noops) / static_cast<double>(tensors.size());
  if (summary != nullptr) *summary = std::move(local);
  return {{"attention_profile.csv", profile}, {"attention_summary.csv", table}};
}

std::vector<Artifact> build_fragmentation(const RunConfig& config, FragmentationReport* report) {
  if (!config.vocab) throw Error(ErrorKind::kConfig, "fragmentation needs --vocab");
  require_file(*config.vocab, "vocabulary");
  const auto corpus = load_corpus(config);
  const auto vocab = in_stage("tokenizer/load_vocab", [&] { return load_vocab(*config.vocab); });
  std::vector<TokenSequence> sequences;
  sequences.reserve(corpus.records.size());
  for (const auto& rec : corpus.records) sequences.push_back(tokenize(rec.normalized_text, vocab, false));
  auto rep = in_stage("tokenizer/fragmentation_report", [&] { return fragmentation_report(sequences); });
  std::vector<Artifact> files{{"fragmentation.csv", fragmentation_csv(rep)}};
  if (report != nullptr) *report = std::move(rep);
  return files;
}

ClassifyArtifacts cmd_classify(const RunConfig& config) {
  auto artifacts = build_classify(config);
  csv::write_atomically(config.out, artifacts.files);
  return artifacts;
}

void cmd_analyze(const RunConfig& config) { csv::write_atomically(config.out, build_analyze(config)); }

void cmd_mine(const RunConfig& config) { csv::write_atomically(config.out, build_mine(config)); }

AttentionSummary cmd_attention(const fs::path& attention_json, double noop_threshold,
                               const fs::path& out) {
  AttentionSummary summary;
  csv::write_atomically(out, build_attention(attention_json, noop_threshold, &summary));
  return summary;
}

FragmentationReport cmd_fragmentation(const RunConfig& config) {
  FragmentationReport report;
  csv::write_atomically(config.out, build_fragmentation(config, &report));
  return report;
}

}  // namespace outcomenorm
