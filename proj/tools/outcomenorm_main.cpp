// Command-line driver: classify, analyze, mine, attention, fragmentation.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "outcomenorm/csv.hpp"
#include "outcomenorm/errors.hpp"
#include "outcomenorm/pipeline.hpp"

namespace {

using outcomenorm::RunConfig;

struct Flags {
  std::string input;
  std::string format = "csv";
  std::string id_col;
  std::string text_col;
  std::string taxonomy = "smith15";
  std::string vocab;
  std::string embeddings;
  std::uint64_t seed = 0;
  std::string pool = "median";
  std::string classification;
  std::string attention;
};

// Flags every corpus command accepts; a command ignores the ones it has no use for.
void add_shared_flags(CLI::App* cmd, Flags& f, RunConfig& c) {
  cmd->add_option("--input", f.input, "outcomes file")->required();
  cmd->add_option("--format", f.format, "csv | aact-pipe")
      ->check(CLI::IsMember({"csv", "aact-pipe"}));
  cmd->add_option("--id-col", f.id_col, "id column name (aact-pipe default: id)");
  cmd->add_option("--text-col", f.text_col, "outcome text column (aact-pipe default: title)");
  cmd->add_option("--taxonomy", f.taxonomy, "smith15 | core5 | path to a label file");
  cmd->add_option("--vocab", f.vocab, "WordPiece vocabulary, one piece per line");
  auto* store = cmd->add_option("--embeddings", f.embeddings, "embedding store (TSV)");
  auto* seed = cmd->add_option("--reference-seed", f.seed, "seed for the reference embedder");
  store->excludes(seed);
  cmd->add_option("--dim", c.dim, "reference embedding dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--pool", f.pool, "median | mean")->check(CLI::IsMember({"median", "mean"}));
  cmd->add_option("--review-margin", c.review_margin, "flag assignments below this margin")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--tau", c.tau, "Jaccard grouping threshold");
  cmd->add_option("--min-freq", c.min_freq, "minimum group frequency")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory");
}

void add_classification_flag(CLI::App* cmd, Flags& f) {
  cmd->add_option("--classification", f.classification,
                  "classification CSV (default: <out>/classification.csv)");
}

RunConfig finish(const CLI::App* cmd, const Flags& f, RunConfig c) {
  c.input = f.input;
  c.format = f.format == "aact-pipe" ? outcomenorm::InputFormat::kAactPipe
                                     : outcomenorm::InputFormat::kCsv;
  if (!f.id_col.empty()) c.id_column = f.id_col;
  if (!f.text_col.empty()) c.text_column = f.text_col;
  c.taxonomy = f.taxonomy;
  if (!f.vocab.empty()) c.vocab = f.vocab;
  if (!f.embeddings.empty()) c.embeddings = f.embeddings;
  if (cmd->count("--reference-seed") > 0) c.reference_seed = f.seed;
  c.pool = outcomenorm::parse_pool_method(f.pool);
  if (!f.classification.empty()) c.classification = f.classification;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot classification of clinical-trial outcomes into outcome taxonomies"};
  app.require_subcommand(1);

  Flags flags;
  RunConfig config;

  auto* classify = app.add_subcommand("classify", "rank taxonomy labels for every outcome");
  add_shared_flags(classify, flags, config);
  classify->add_option("--threads", config.threads, "worker threads")->check(CLI::PositiveNumber);
  classify->add_flag("--softmax-baseline", config.softmax_baseline,
                     "also write counts from an untrained softmax head");

  auto* analyze = app.add_subcommand("analyze", "cluster distances, outliers and PCA projection");
  add_shared_flags(analyze, flags, config);
  add_classification_flag(analyze, flags);
  analyze->add_option("--components", config.components, "projection dimensions")
      ->check(CLI::IsMember({2, 3}));

  auto* mine = app.add_subcommand("mine", "mine candidate core outcomes per label");
  add_shared_flags(mine, flags, config);
  add_classification_flag(mine, flags);

  auto* attention = app.add_subcommand("attention", "[CLS] attention profile and [SEP] no-op check");
  attention->add_option("--input", flags.attention, "attention JSON")->required();
  attention->add_option("--noop-threshold", config.noop_threshold, "[SEP] share above which a sequence is a no-op");
  attention->add_option("--out", config.out, "output directory");

  auto* fragmentation = app.add_subcommand("fragmentation", "subword fragmentation of corpus words");
  add_shared_flags(fragmentation, flags, config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (classify->parsed()) {
      const auto result = outcomenorm::cmd_classify(finish(classify, flags, config));
      std::printf("classified %zu outcomes, %zu rejected\n", result.classified, result.rejected);
    } else if (analyze->parsed()) {
      outcomenorm::cmd_analyze(finish(analyze, flags, config));
    } else if (mine->parsed()) {
      outcomenorm::cmd_mine(finish(mine, flags, config));
    } else if (attention->parsed()) {
      const auto summary = outcomenorm::cmd_attention(flags.attention, config.noop_threshold, config.out);
      for (std::size_t i = 0; i < summary.profiles.size(); ++i) {
        std::printf("sequence %zu sep_share %s noop %s\n", i,
                    outcomenorm::csv::format_fixed(summary.profiles[i].sep_share, 6).c_str(),
                    summary.profiles[i].noop_flag ? "true" : "false");
      }
      std::printf("noop_fraction %s\n", outcomenorm::csv::format_fixed(summary.noop_fraction, 6).c_str());
    } else if (fragmentation->parsed()) {
      const auto report = outcomenorm::cmd_fragmentation(finish(fragmentation, flags, config));
      std::printf("fragmented_fraction %s\n",
                  outcomenorm::csv::format_fixed(report.fragmented_fraction, 6).c_str());
    }
  } catch (const outcomenorm::Error& e) {
    std::cerr << "outcomenorm: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "outcomenorm: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
