#include "outcomenorm/tokenizer.hpp"

#include <algorithm>
#include <map>

#include "outcomenorm/csv.hpp"
#include "outcomenorm/errors.hpp"

namespace outcomenorm {

Vocabulary::Vocabulary(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {
  index_.reserve(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    if (p.empty()) throw Error(ErrorKind::kVocab, "empty piece at line " + std::to_string(i + 1));
    if (!index_.emplace(p, static_cast<TokenId>(i)).second) {
      throw Error(ErrorKind::kVocab, "duplicate piece '" + p + "' at line " + std::to_string(i + 1));
    }
    longest_piece_ = std::max(longest_piece_, p.size());
  }
  auto required = [&](std::string_view name) {
    const auto id = find(name);
    if (!id) throw Error(ErrorKind::kVocab, "vocabulary lacks " + std::string(name));
    return *id;
  };
  unk_id_ = required(kUnkToken);
  cls_id_ = required(kClsToken);
  sep_id_ = required(kSepToken);
  pad_id_ = find(kPadToken);
}

std::optional<TokenId> Vocabulary::find(std::string_view piece) const {
  const auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  const std::string text = csv::read_file(path);
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pieces.push_back(std::move(line));
    start = end + 1;
  }
  return Vocabulary(std::move(pieces));
}

namespace {

void push(TokenSequence& seq, const Vocabulary& vocab, TokenId id, bool special) {
  seq.pieces.push_back(vocab.piece(id));
  seq.ids.push_back(id);
  seq.specials_mask.push_back(special);
}

// Pieces for one word, or nothing when the word must collapse to [UNK].
std::vector<TokenId> word_pieces(std::string_view word, const Vocabulary& vocab) {
  std::vector<TokenId> out;
  if (word.size() > kMaxWordChars) return out;
  std::string candidate;
  std::size_t start = 0;
  while (start < word.size()) {
    const std::size_t prefix = start > 0 ? kContinuationPrefix.size() : 0;
    std::size_t len = std::min(word.size() - start,
                               vocab.longest_piece() > prefix ? vocab.longest_piece() - prefix : 0);
    std::optional<TokenId> match;
    for (; len > 0; --len) {
      candidate.clear();
      if (start > 0) candidate += kContinuationPrefix;
      candidate += word.substr(start, len);
      if ((match = vocab.find(candidate))) break;
    }
    if (!match) return {};
    out.push_back(*match);
    start += len;
  }
  return out;
}

}  // namespace

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, bool with_specials) {
  TokenSequence seq;
  if (with_specials) push(seq, vocab, vocab.cls_id(), true);

  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t begin = text.find_first_not_of(' ', pos);
    if (begin == std::string_view::npos) break;
    std::size_t end = text.find(' ', begin);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view word = text.substr(begin, end - begin);

    WordSpan span{std::string(word), seq.pieces.size(), seq.pieces.size()};
    const auto ids = word_pieces(word, vocab);
    if (ids.empty()) {
      push(seq, vocab, vocab.unk_id(), false);
    } else {
      for (const TokenId id : ids) push(seq, vocab, id, false);
    }
    span.end = seq.pieces.size();
    seq.word_spans.push_back(std::move(span));
    pos = end;
  }

  if (with_specials) push(seq, vocab, vocab.sep_id(), true);
  return seq;
}

FragmentationReport fragmentation_report(std::span<const TokenSequence> corpus) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "fragmentation report needs input");

  std::map<std::string, WordFragmentation> by_word;
  std::size_t occurrences = 0;
  std::size_t fragmented = 0;
  for (const auto& seq : corpus) {
    for (const auto& span : seq.word_spans) {
      const std::size_t pieces = span.end - span.begin;
      const bool is_unk = pieces == 1 && seq.pieces[span.begin] == kUnkToken;
      const bool frag = pieces > 1 || is_unk;
      auto& entry = by_word[span.word];
      entry.word = span.word;
      entry.piece_count = pieces;
      entry.fragmented = frag;
      ++entry.count;
      ++occurrences;
      if (frag) ++fragmented;
    }
  }

  FragmentationReport report;
  report.words.reserve(by_word.size());
  for (auto& [_, entry] : by_word) report.words.push_back(std::move(entry));
  std::sort(report.words.begin(), report.words.end(),
            [](const WordFragmentation& a, const WordFragmentation& b) {
              if (a.piece_count != b.piece_count) return a.piece_count > b.piece_count;
              if (a.count != b.count) return a.count > b.count;
              return a.word < b.word;
            });
  report.fragmented_fraction =
      occurrences == 0 ? 0.0 : static_cast<double>(fragmented) / static_cast<double>(occurrences);
  return report;
}

std::string fragmentation_csv(const FragmentationReport& report) {
  std::string out = "word,count,piece_count,fragmented\n";
  for (const auto& w : report.words) {
    out += csv::join({w.word, std::to_string(w.count), std::to_string(w.piece_count),
                      w.fragmented ? "true" : "false"});
    out += '\n';
  }
  return out;
}

}  // namespace outcomenorm
