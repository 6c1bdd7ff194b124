#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace outcomenorm {

/// One scraped outcome description.
struct OutcomeRecord {
  std::string id;
  std::string raw_text;
  std::string normalized_text;
  std::optional<std::string> study_id;
  std::size_t line = 0;  // source line of the row, 1-based

  bool operator==(const OutcomeRecord&) const = default;
};

struct Reject {
  std::size_t line = 0;
  std::string reason;

  bool operator==(const Reject&) const = default;
};

struct LoadedCorpus {
  std::vector<OutcomeRecord> records;
  std::vector<Reject> rejects;
  std::size_t data_rows = 0;
};

enum class InputFormat { kCsv, kAactPipe };

struct ColumnNames {
  std::string id = "id";
  std::string text = "outcome_text";
  std::string study = "study_id";

  static ColumnNames defaults_for(InputFormat format);
};

/// Lowercases ASCII, maps every byte outside [a-z0-9] to a space, collapses
/// whitespace runs and trims. Throws EmptyOutcome when nothing survives.
std::string normalize_text(std::string_view raw);

/// Loads outcome rows. Rows whose text normalizes to nothing, or whose id
/// repeats an earlier row, land in `rejects` with their line number.
LoadedCorpus load_outcomes(const std::filesystem::path& path, InputFormat format,
                           const ColumnNames& columns);
LoadedCorpus load_outcomes(const std::filesystem::path& path,
                           InputFormat format = InputFormat::kCsv);
LoadedCorpus parse_outcomes(std::string_view text, InputFormat format,
                            const ColumnNames& columns);

/// Named, ordered label inventory. Label order is the tie-break order.
struct TaxonomyDef {
  std::string name;
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }
  std::optional<std::size_t> index_of(std::string_view label) const;
};

TaxonomyDef make_taxonomy(std::string name, const std::vector<std::string>& labels);

/// "smith15", "core5", or a path to a file holding one label per line.
TaxonomyDef load_taxonomy(const std::string& name_or_path);

}  // namespace outcomenorm
