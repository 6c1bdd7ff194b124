#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace outcomenorm {

using TokenId = std::int64_t;

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kContinuationPrefix = "##";
inline constexpr std::size_t kMaxWordChars = 100;

/// WordPiece vocabulary; a piece's id is its zero-based position.
class Vocabulary {
 public:
  /// Throws VocabError on duplicate or empty pieces and when [UNK], [CLS] or
  /// [SEP] is absent.
  explicit Vocabulary(std::vector<std::string> pieces);

  std::optional<TokenId> find(std::string_view piece) const;
  const std::string& piece(TokenId id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return pieces_.size(); }
  std::size_t longest_piece() const { return longest_piece_; }

  TokenId unk_id() const { return unk_id_; }
  TokenId cls_id() const { return cls_id_; }
  TokenId sep_id() const { return sep_id_; }
  std::optional<TokenId> pad_id() const { return pad_id_; }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t longest_piece_ = 0;
  TokenId unk_id_ = 0;
  TokenId cls_id_ = 0;
  TokenId sep_id_ = 0;
  std::optional<TokenId> pad_id_;
};

Vocabulary load_vocab(const std::filesystem::path& path);

struct WordSpan {
  std::string word;
  std::size_t begin = 0;  // first piece index
  std::size_t end = 0;    // one past the last piece index

  bool operator==(const WordSpan&) const = default;
};

struct TokenSequence {
  std::vector<std::string> pieces;
  std::vector<TokenId> ids;
  std::vector<WordSpan> word_spans;
  std::vector<bool> specials_mask;

  bool operator==(const TokenSequence&) const = default;
};

/// Greedy longest-match-first WordPiece over already normalized text. A word
/// with any unmatched remainder, or longer than kMaxWordChars, becomes [UNK].
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, bool with_specials);

struct WordFragmentation {
  std::string word;
  std::size_t count = 0;
  std::size_t piece_count = 0;
  bool fragmented = false;

  bool operator==(const WordFragmentation&) const = default;
};

struct FragmentationReport {
  std::vector<WordFragmentation> words;
  double fragmented_fraction = 0.0;  // over word occurrences
};

/// Ordered by descending piece count, then descending count, then word.
FragmentationReport fragmentation_report(std::span<const TokenSequence> corpus);

std::string fragmentation_csv(const FragmentationReport& report);

}  // namespace outcomenorm
