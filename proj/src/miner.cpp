#include "outcomenorm/miner.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

#include "outcomenorm/csv.hpp"
#include "outcomenorm/errors.hpp"

namespace outcomenorm {

TokenSet token_set(std::string_view normalized_text) {
  TokenSet out;
  std::size_t pos = 0;
  while (pos < normalized_text.size()) {
    const std::size_t begin = normalized_text.find_first_not_of(' ', pos);
    if (begin == std::string_view::npos) break;
    std::size_t end = normalized_text.find(' ', begin);
    if (end == std::string_view::npos) end = normalized_text.size();
    out.emplace(normalized_text.substr(begin, end - begin));
    pos = end;
  }
  return out;
}

double jaccard(const TokenSet& a, const TokenSet& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::kEmptySet, "jaccard of an empty token set");
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t total = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(total);
}

std::vector<std::vector<double>> pairwise_jaccard(std::span<const std::string> texts) {
  std::vector<TokenSet> sets;
  sets.reserve(texts.size());
  for (const auto& t : texts) sets.push_back(token_set(t));
  std::vector<std::vector<double>> m(texts.size(), std::vector<double>(texts.size(), 1.0));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      m[i][j] = m[j][i] = jaccard(sets[i], sets[j]);
    }
  }
  return m;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

std::vector<std::vector<std::size_t>> groups_from_matrix(const std::vector<std::vector<double>>& m,
                                                         double tau) {
  DisjointSets sets(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      if (m[i][j] >= tau) sets.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < m.size(); ++i) by_root[sets.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(by_root.size());
  for (auto& [_, members] : by_root) groups.push_back(std::move(members));
  return groups;
}

struct DistinctText {
  std::string text;
  std::vector<std::string> ids;
};

}  // namespace

std::vector<std::vector<std::size_t>> single_link_groups(std::span<const std::string> texts,
                                                         double tau) {
  return groups_from_matrix(pairwise_jaccard(texts), tau);
}

MiningResult mine_candidates(std::span<const RankedClassification> classifications,
                             std::span<const OutcomeRecord> outcomes, const TaxonomyDef& taxonomy,
                             const MineOptions& options) {
  std::unordered_map<std::string_view, const OutcomeRecord*> by_id;
  for (const auto& o : outcomes) by_id.emplace(o.id, &o);

  // label index -> text -> ids; std::map keeps texts sorted so the result does
  // not depend on input order.
  std::vector<std::map<std::string, std::vector<std::string>>> per_label(taxonomy.size());
  for (const auto& c : classifications) {
    const auto label = taxonomy.index_of(c.assigned);
    if (!label) {
      throw Error(ErrorKind::kTaxonomy,
                  "outcome " + c.outcome_id + " assigned to unknown label '" + c.assigned + "'");
    }
    const auto it = by_id.find(c.outcome_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kSchema, "classified outcome " + c.outcome_id + " not in corpus");
    }
    per_label[*label][it->second->normalized_text].push_back(c.outcome_id);
  }

  MiningResult result;
  for (std::size_t l = 0; l < taxonomy.size(); ++l) {
    std::vector<DistinctText> distinct;
    for (auto& [text, ids] : per_label[l]) distinct.push_back({text, std::move(ids)});
    if (distinct.empty()) continue;

    std::vector<std::string> texts;
    for (const auto& d : distinct) texts.push_back(d.text);
    const auto matrix = pairwise_jaccard(texts);

    std::vector<CoreOutcomeCandidate> emitted;
    for (const auto& group : groups_from_matrix(matrix, options.tau)) {
      CoreOutcomeCandidate cand;
      cand.label = taxonomy.labels[l];
      cand.group_size = group.size();
      std::size_t best_freq = 0;
      for (std::size_t a = 0; a < group.size(); ++a) {
        const auto& member = distinct[group[a]];
        cand.frequency += member.ids.size();
        cand.member_ids.insert(cand.member_ids.end(), member.ids.begin(), member.ids.end());
        // texts are visited in ascending order, so strict > keeps the smallest on ties
        if (member.ids.size() > best_freq) {
          best_freq = member.ids.size();
          cand.representative_text = member.text;
        }
        for (std::size_t b = a + 1; b < group.size(); ++b) {
          cand.group_min_jaccard = std::min(cand.group_min_jaccard, matrix[group[a]][group[b]]);
        }
      }
      if (cand.frequency < options.min_freq) continue;
      std::sort(cand.member_ids.begin(), cand.member_ids.end());
      if (cand.group_min_jaccard >= options.tau) {
        emitted.push_back(std::move(cand));
      } else {
        result.chained.push_back(std::move(cand));
      }
    }
    std::sort(emitted.begin(), emitted.end(),
              [](const CoreOutcomeCandidate& a, const CoreOutcomeCandidate& b) {
                if (a.group_min_jaccard != b.group_min_jaccard) {
                  return a.group_min_jaccard > b.group_min_jaccard;
                }
                if (a.frequency != b.frequency) return a.frequency > b.frequency;
                return a.representative_text < b.representative_text;
              });
    for (auto& c : emitted) result.candidates.push_back(std::move(c));
  }
  return result;
}

std::string candidates_csv(std::span<const CoreOutcomeCandidate> candidates) {
  std::string out = "label,representative_text,frequency,group_size,group_min_jaccard,member_ids\n";
  for (const auto& c : candidates) {
    std::string ids;
    for (std::size_t i = 0; i < c.member_ids.size(); ++i) {
      if (i > 0) ids += ';';
      ids += c.member_ids[i];
    }
    out += csv::join({c.label, c.representative_text, std::to_string(c.frequency),
                      std::to_string(c.group_size), csv::format_fixed(c.group_min_jaccard, 6), ids});
    out += '\n';
  }
  return out;
}

}  // namespace outcomenorm
