// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "outcomenorm/classifier.hpp"
#include "outcomenorm/cluster.hpp"
#include "outcomenorm/corpus.hpp"
#include "outcomenorm/csv.hpp"
#include "outcomenorm/embedding.hpp"
#include "outcomenorm/errors.hpp"
#include "outcomenorm/miner.hpp"
#include "outcomenorm/pipeline.hpp"
#include "outcomenorm/tokenizer.hpp"

using namespace outcomenorm;
namespace fs = std::filesystem;

namespace {

const fs::path kData = OUTCOMENORM_TEST_DATA;

struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() == 5) failures.push_back("...");
  }
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<void(Check&)> body;
};

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("outcomenorm_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig fixture_config(const fs::path& out) {
  RunConfig c;
  c.input = kData / "fixture_outcomes.csv";
  c.vocab = kData / "fixture_vocab.txt";
  c.reference_seed = 42;
  c.dim = 32;
  c.out = out;
  return c;
}

EmbeddingVector random_vec(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n;
  std::vector<double> v(dim);
  do {
    for (double& x : v) x = n(rng);
  } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
  return EmbeddingVector(std::move(v));
}

LabelEmbeddingSet random_labels(std::mt19937_64& rng, std::size_t count, std::size_t dim) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) names.push_back("label " + std::to_string(i));
  LabelEmbeddingSet set{make_taxonomy("random", names), {}};
  for (std::size_t i = 0; i < count; ++i) {
    // Occasionally duplicate an earlier direction to exercise the tie rule.
    if (i > 0 && rng() % 5 == 0) {
      set.vectors.push_back(set.vectors[rng() % i].scaled(2.0));
    } else {
      set.vectors.push_back(random_vec(rng, dim));
    }
  }
  return set;
}

// Selection by repeated scan: take the highest remaining similarity, earliest
// label on ties.
std::vector<std::size_t> brute_force_order(const std::vector<double>& sims) {
  std::vector<bool> used(sims.size(), false);
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < sims.size(); ++k) {
    std::size_t best = sims.size();
    for (std::size_t i = 0; i < sims.size(); ++i) {
      if (!used[i] && (best == sims.size() || sims[i] > sims[best])) best = i;
    }
    used[best] = true;
    order.push_back(best);
  }
  return order;
}

std::vector<std::size_t> label_order(const RankedClassification& r) {
  std::vector<std::size_t> out;
  for (const auto& s : r.ranked) out.push_back(s.label_index);
  return out;
}

std::size_t sum(const std::vector<std::size_t>& v) { return std::accumulate(v.begin(), v.end(), std::size_t{0}); }

// ---------------------------------------------------------------------------

void label_table_conservation(Check& check) {
  // Count tables as printed for ~24,000 outcomes.
  const std::vector<std::pair<std::string, std::size_t>> smith_table{
      {"withdrawal treatment study", 10100}, {"activities daily living", 4775},
      {"adverse events effects", 3196},      {"quality life", 3139},
      {"satisfaction", 600},                 {"psychosocial", 552},
      {"physiological clinical", 538},       {"mortality survival", 455},
      {"compliance", 174},                   {"operative", 103},
      {"pain", 102},                         {"economic", 90},
      {"hospital", 34},                      {"infection", 22},
      {"medication", 20}};
  const std::vector<std::pair<std::string, std::size_t>> core_table{
      {"life impact", 10461}, {"resource use", 6806}, {"physiological clinical", 3087},
      {"adverse events", 2045}, {"death", 1501}};
  std::size_t smith_total = 0;
  std::size_t core_total = 0;
  for (const auto& [_, n] : smith_table) smith_total += n;
  for (const auto& [_, n] : core_table) core_total += n;
  check.expect(smith_total == 23900, "printed smith15 table sums to " + std::to_string(smith_total));
  check.expect(core_total == 23900, "printed core5 table sums to " + std::to_string(core_total));

  const auto smith = load_taxonomy("smith15");
  const auto core = load_taxonomy("core5");
  for (std::size_t i = 0; i < smith_table.size(); ++i) {
    check.expect(smith.labels.at(i) == smith_table[i].first, "smith15 label order at " + std::to_string(i));
  }
  for (std::size_t i = 0; i < core_table.size(); ++i) {
    check.expect(core.labels.at(i) == core_table[i].first, "core5 label order at " + std::to_string(i));
  }

  const auto vocab = load_vocab(kData / "fixture_vocab.txt");
  const auto corpus = load_outcomes(kData / "fixture_outcomes.csv");
  const EmbeddingProvider provider{nullptr, ReferenceEmbedder{42, 32}};
  const auto a = classify_corpus(corpus.records, embed_labels(smith, &vocab, provider), &vocab, provider);
  const auto b = classify_corpus(corpus.records, embed_labels(core, &vocab, provider), &vocab, provider);
  check.expect(sum(a.counts) + a.rejects.size() == corpus.records.size(), "smith15 accounts for every outcome");
  check.expect(sum(b.counts) + b.rejects.size() == corpus.records.size(), "core5 accounts for every outcome");
  check.expect(sum(a.counts) == sum(b.counts), "fixture totals differ between taxonomies");
}

void review_flag(Check& check) {
  RankedClassification r;
  r.ranked = {{4, "satisfaction", 0.07983480404141685}, {7, "mortality survival", 0.07842027449192909}};
  assign(r);
  check.expect(std::abs(r.margin - 0.00141452954948776) <= 1e-12, "margin " + csv::format_general(r.margin, 17));
  check.expect(r.needs_review, "printed mortality case not flagged at default margin");
  check.expect(r.assigned == "satisfaction", "assigned label");
}

void ranking_oracle(Check& check) {
  std::mt19937_64 rng(1001);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t labels = 2 + rng() % 9;
    const std::size_t dim = 2 + rng() % 12;
    const auto set = random_labels(rng, labels, dim);
    const auto outcome = random_vec(rng, dim);
    std::vector<double> sims;
    for (const auto& v : set.vectors) sims.push_back(cosine(outcome, v));
    const auto got = rank_labels(outcome, set);
    check.expect(label_order(got) == brute_force_order(sims), "instance " + std::to_string(i));
  }
}

void scale_invariance(Check& check) {
  std::mt19937_64 rng(2002);
  const double scales[] = {1e-6, 0.5, 3.0, 1e6};
  for (int i = 0; i < 1000; ++i) {
    const std::size_t labels = 2 + rng() % 14;
    const std::size_t dim = 2 + rng() % 30;
    const auto set = random_labels(rng, labels, dim);
    const auto v = random_vec(rng, dim);
    auto base = rank_labels(v, set);
    assign(base);
    for (const double c : scales) {
      auto scaled = rank_labels(v.scaled(c), set);
      assign(scaled);
      check.expect(scaled.assigned == base.assigned && label_order(scaled) == label_order(base),
                   "instance " + std::to_string(i) + " scale " + csv::format_general(c, 3));
    }
  }
}

void pooling_properties(Check& check) {
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> grid(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng() % 11;
    const std::size_t dim = 1 + rng() % 16;
    std::vector<EmbeddingVector> set;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> v(dim);
      for (double& x : v) x = grid(rng) * 0.125;
      set.emplace_back(std::move(v));
    }
    const auto pooled = pool(set, PoolMethod::kMedian);
    auto shuffled = set;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    check.expect(pool(shuffled, PoolMethod::kMedian) == pooled, "permutation " + std::to_string(i));
    for (std::size_t d = 0; d < dim; ++d) {
      double lo = set[0][d];
      double hi = set[0][d];
      bool present = false;
      for (const auto& v : set) {
        lo = std::min(lo, v[d]);
        hi = std::max(hi, v[d]);
        present = present || v[d] == pooled[d];
      }
      check.expect(lo <= pooled[d] && pooled[d] <= hi, "bounds " + std::to_string(i));
      if (n % 2 == 1) check.expect(present, "odd median membership " + std::to_string(i));
    }
  }
}

void tokenizer_properties(Check& check) {
  const Vocabulary vocab({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "mortality", "rate", "co", "##vid", "sed",
                          "##ation", "brain", "##stem", "##s", "a", "ab", "##b", "##ba", "##a", "b",
                          "##c", "c", "cov", "##id", "##19", "1", "##9"});
  std::mt19937_64 rng(4004);
  const std::vector<std::string> seeds{"mortality", "rate", "covid", "sedation", "brainstem",
                                       "covid19", "rates", "brains", "abba"};
  std::string text;
  for (int i = 0; i < 500; ++i) {
    if (i > 0) text += ' ';
    if (rng() % 3 == 0) {
      const int len = 1 + static_cast<int>(rng() % 7);
      for (int k = 0; k < len; ++k) text.push_back("abcx19"[rng() % 6]);
    } else {
      text += seeds[rng() % seeds.size()];
    }
  }
  const auto seq = tokenize(text, vocab, true);
  check.expect(seq.word_spans.size() == 500, "500 words");
  check.expect(seq.pieces.front() == "[CLS]" && seq.pieces.back() == "[SEP]", "specials");
  check.expect(seq.pieces.size() == seq.ids.size(), "pieces/ids length");
  for (std::size_t i = 0; i < seq.pieces.size(); ++i) {
    check.expect(vocab.find(seq.pieces[i]) == std::optional<TokenId>(seq.ids[i]), "piece in vocab");
  }
  for (const auto& span : seq.word_spans) {
    if (span.end - span.begin == 1 && seq.pieces[span.begin] == "[UNK]") continue;
    std::string rebuilt;
    std::size_t offset = 0;
    for (std::size_t p = span.begin; p < span.end; ++p) {
      const bool cont = p > span.begin;
      const std::string body = cont ? seq.pieces[p].substr(2) : seq.pieces[p];
      check.expect(!cont || seq.pieces[p].rfind("##", 0) == 0, "continuation prefix");
      // No strictly longer vocabulary piece matches at this offset.
      for (std::size_t len = body.size() + 1; offset + len <= span.word.size(); ++len) {
        const std::string longer = (cont ? "##" : "") + span.word.substr(offset, len);
        check.expect(!vocab.find(longer), "greedy at '" + span.word + "' offset " + std::to_string(offset));
      }
      rebuilt += body;
      offset += body.size();
    }
    check.expect(rebuilt == span.word, "round trip '" + span.word + "'");
  }
  check.expect(tokenize(text, vocab, true) == seq, "determinism");
}

std::vector<std::vector<std::size_t>> bfs_components(const std::vector<std::string>& texts, double tau) {
  std::vector<TokenSet> sets;
  for (const auto& t : texts) sets.push_back(token_set(t));
  std::vector<int> comp(texts.size(), -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < texts.size(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> members;
    std::queue<std::size_t> q;
    q.push(s);
    comp[s] = 1;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      members.push_back(u);
      for (std::size_t v = 0; v < texts.size(); ++v) {
        // direct count, independent of the library's merge walk
        std::size_t common = 0;
        for (const auto& w : sets[u]) common += sets[v].count(w);
        const double j = static_cast<double>(common) /
                         static_cast<double>(sets[u].size() + sets[v].size() - common);
        if (comp[v] < 0 && j >= tau) {
          comp[v] = 1;
          q.push(v);
        }
      }
    }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void jaccard_suite(Check& check) {
  std::mt19937_64 rng(5005);
  const std::vector<std::string> words{"mortality", "rate", "adverse", "events", "number", "pain",
                                       "score", "days", "icu", "stay"};
  auto random_text = [&] {
    std::string t;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) t += (k ? " " : "") + words[rng() % words.size()];
    return t;
  };
  for (int i = 0; i < 1000; ++i) {
    const auto a = token_set(random_text());
    const auto b = token_set(random_text());
    const double j = jaccard(a, b);
    check.expect(jaccard(a, a) == 1.0, "identity");
    check.expect(j == jaccard(b, a), "symmetry");
    check.expect(0.0 <= j && j <= 1.0, "bounds");
    check.expect((j == 1.0) == (a == b), "one iff equal sets");
  }
  check.expect(jaccard(token_set("adverse events absolute number"), token_set("adverse events percentage")) == 0.4,
               "adverse events pair is not 0.4");
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::string> texts;
    for (int i = 0; i < 100; ++i) texts.push_back(random_text());
    const double tau = 0.25 + 0.125 * (trial % 5);
    auto got = single_link_groups(texts, tau);
    std::sort(got.begin(), got.end());
    check.expect(got == bfs_components(texts, tau), "components trial " + std::to_string(trial));
  }
}

void attention_diagnostics(Check& check) {
  AttentionTensor t;
  t.tokens = {"[CLS]", "mortality", "[SEP]"};
  const std::vector<double> filler{0.2, 0.3, 0.5};
  t.weights = {{{0.1, 0.2, 0.7}, filler, filler}, {{0.1, 0.4, 0.5}, filler, filler}};
  const auto p = attention_cls_profile(t);
  const double want[] = {0.1, 0.3, 0.6};
  for (std::size_t i = 0; i < 3; ++i) {
    check.expect(std::abs(p.weights[i] - want[i]) <= 1e-12, "weight " + std::to_string(i));
  }
  check.expect(std::abs(p.sep_share - 0.6) <= 1e-12, "sep_share");
  check.expect(p.noop_flag, "noop flag");

  auto off = t;
  off.weights[0][0] = {0.1, 0.2, 0.701};
  bool rejected = false;
  try {
    attention_cls_profile(off);
  } catch (const Error& e) {
    rejected = e.kind() == ErrorKind::kAttentionFormat;
  }
  check.expect(rejected, "row off by 1e-3 accepted");
}

void softmax_head_checks(Check& check) {
  std::mt19937_64 rng(6006);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t dim = 1 + rng() % 8;
    const std::size_t labels = 2 + rng() % 14;
    DenseMatrix w{dim, labels, std::vector<double>(dim * labels)};
    for (double& x : w.data) x = n(rng);
    std::vector<double> bias(labels);
    for (double& x : bias) x = n(rng);
    const auto v = random_vec(rng, dim);
    const auto base = softmax_head(v, w, bias);
    const double total = std::accumulate(base.probabilities.begin(), base.probabilities.end(), 0.0);
    check.expect(std::abs(total - 1.0) <= 1e-9, "sum " + std::to_string(i));
    const double shift = n(rng) * 100.0;
    auto shifted_bias = bias;
    for (double& x : shifted_bias) x += shift;
    const auto shifted = softmax_head(v, w, shifted_bias);
    for (std::size_t l = 0; l < labels; ++l) {
      check.expect(std::abs(shifted.probabilities[l] - base.probabilities[l]) <= 1e-9, "shift " + std::to_string(i));
    }
  }

  const auto vocab = load_vocab(kData / "fixture_vocab.txt");
  const auto corpus = load_outcomes(kData / "fixture_outcomes.csv");
  const EmbeddingProvider provider{nullptr, ReferenceEmbedder{42, 32}};
  const auto taxonomy = load_taxonomy("smith15");
  int collapsed = 0;
  std::string shares;
  std::string pooled_shares;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto head = random_softmax_head(32, taxonomy.size(), seed);
    const auto counts = softmax_baseline_counts(corpus.records, vocab, provider, head);
    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    shares += " " + std::to_string(top) + "/" + std::to_string(corpus.records.size());
    if (top * 10 >= corpus.records.size() * 6) ++collapsed;

    // Reported only: a head over pooled isotropic vectors has nothing shared to collapse onto.
    const auto pooled = softmax_baseline_counts(corpus.records, vocab, provider, head,
                                                HeadInput::kPooledSequence);
    pooled_shares += " " + std::to_string(*std::max_element(pooled.begin(), pooled.end()));
  }
  std::printf("       top-label share per seed, [CLS] input:%s\n", shares.c_str());
  std::printf("       top-label count per seed, pooled input (not asserted):%s\n", pooled_shares.c_str());
  check.expect(collapsed >= 8, "only " + std::to_string(collapsed) + " of 10 seeds collapsed");
}

void throughput(Check& check) {
  // Synthetic corpus drawn from the fixture vocabulary's whole words.
  const auto vocab = load_vocab(kData / "fixture_vocab.txt");
  std::vector<std::string> words;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& p = vocab.piece(static_cast<TokenId>(i));
    if (p.front() != '[' && p.rfind("##", 0) != 0) words.push_back(p);
  }
  words.push_back("covid");
  words.push_back("sedation");
  std::mt19937_64 rng(7007);
  std::vector<OutcomeRecord> outcomes;
  outcomes.reserve(24000);
  for (int i = 0; i < 24000; ++i) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) text += (k ? " " : "") + words[rng() % words.size()];
    outcomes.push_back({"s" + std::to_string(i), text, text, std::nullopt, static_cast<std::size_t>(i + 2)});
  }
  const EmbeddingProvider provider{nullptr, ReferenceEmbedder{42, kDefaultDim}};
  const auto labels = embed_labels(load_taxonomy("smith15"), &vocab, provider);

  std::string first;
  for (int run = 0; run < 2; ++run) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = classify_corpus(outcomes, labels, &vocab, provider);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("       run %d: 24000 outcomes x 15 labels at dim 1024 in %.2f s\n", run + 1, secs);
    check.expect(secs <= 10.0, "classification took " + std::to_string(secs) + " s");
    check.expect(result.classifications.size() == 24000, "all synthetic outcomes classified");
    const auto rendered = classification_csv(result.classifications) + counts_csv(labels.taxonomy, result.counts);
    if (run == 0) {
      first = rendered;
    } else {
      check.expect(rendered == first, "runs differ");
    }
  }
}

void golden_pipeline(Check& check) {
  const auto out = scratch("golden");
  auto config = fixture_config(out);
  cmd_classify(config);
  cmd_analyze(config);
  cmd_mine(config);
  config.taxonomy = "core5";
  config.out = out / "core5";
  cmd_classify(config);

  const std::vector<std::pair<fs::path, fs::path>> pairs{
      {"classification.csv", "classification.csv"}, {"counts.csv", "counts.csv"},
      {"rejects.csv", "rejects.csv"},               {"distances.csv", "distances.csv"},
      {"outliers.csv", "outliers.csv"},             {"projection.csv", "projection.csv"},
      {"candidates.csv", "candidates.csv"},         {"chained_groups.csv", "chained_groups.csv"},
      {"core5/counts.csv", "counts_core5.csv"}};
  for (const auto& [produced, golden] : pairs) {
    const auto want = kData / "golden" / golden;
    check.expect(fs::exists(want), "missing golden " + golden.string());
    check.expect(read(out / produced) == read(want), produced.string() + " differs from golden");
  }
  fs::remove_all(out);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", "taxonomy count conservation (printed tables sum to 23,900)", 1.0, label_table_conservation},
      {"AC2", "review flag on the printed mortality similarities", 0.001, review_flag},
      {"AC3", "ranking equals brute-force sort with tie rule (1,000 cases)", 1.0, ranking_oracle},
      {"AC4", "ranking invariant under positive scaling (1,000 cases)", 1.0, scale_invariance},
      {"AC5", "median pooling properties (1,000 sets)", 1.0, pooling_properties},
      {"AC6", "tokenizer round trip, greedy match, determinism (500 words)", 1.0, tokenizer_properties},
      {"AC7", "Jaccard properties and single-link components", 1.0, jaccard_suite},
      {"AC8", "attention [CLS] profile and row validation", 0.001, attention_diagnostics},
      {"AC9", "softmax head normalisation and untrained collapse", 1.0, softmax_head_checks},
      {"AC10", "24,000 outcomes in <= 10 s, repeatable", 25.0, throughput},
      {"AC11", "fixture pipeline reproduces golden CSVs", 5.0, golden_pipeline},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      check.failures.push_back("took " + std::to_string(secs) + " s, budget " + std::to_string(c.budget_seconds) + " s");
    }
    const bool ok = check.failures.empty();
    if (!ok) ++failed;
    std::printf("[%s] %-5s %s (%.3f s)\n", ok ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(), secs);
    for (const auto& f : check.failures) std::printf("       - %s\n", f.c_str());
  }
  std::printf("%zu/%zu acceptance criteria passed\n", criteria.size() - failed, criteria.size());
  fs::remove_all(fs::temp_directory_path() / ("outcomenorm_acceptance_" + std::to_string(::getpid())));
  return failed == 0 ? 0 : 1;
}
