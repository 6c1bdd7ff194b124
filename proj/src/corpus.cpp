#include "outcomenorm/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include "outcomenorm/csv.hpp"
#include "outcomenorm/errors.hpp"

namespace outcomenorm {

namespace {

bool is_kept(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }

const std::vector<std::string>& smith15_labels() {
  static const std::vector<std::string> labels = {
      "withdrawal treatment study", "activities daily living", "adverse events effects",
      "quality life",               "satisfaction",            "psychosocial",
      "physiological clinical",     "mortality survival",      "compliance",
      "operative",                  "pain",                    "economic",
      "hospital",                   "infection",               "medication",
  };
  return labels;
}

const std::vector<std::string>& core5_labels() {
  static const std::vector<std::string> labels = {
      "life impact", "resource use", "physiological clinical", "adverse events", "death",
  };
  return labels;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::kSchema, "missing required column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

ColumnNames ColumnNames::defaults_for(InputFormat format) {
  if (format == InputFormat::kAactPipe) return ColumnNames{"id", "title", "nct_id"};
  return ColumnNames{};
}

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (const char ch : raw) {
    char c = ch;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (is_kept(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    } else {
      pending_space = true;
    }
  }
  if (out.empty()) throw Error(ErrorKind::kEmptyOutcome, "text is empty after normalization");
  return out;
}

LoadedCorpus parse_outcomes(std::string_view text, InputFormat format,
                            const ColumnNames& columns) {
  const char delimiter = format == InputFormat::kAactPipe ? '|' : ',';
  auto rows = csv::parse(text, delimiter);
  if (rows.empty()) throw Error(ErrorKind::kSchema, "missing header row");

  const auto& header = rows.front().fields;
  const std::size_t id_col = column_index(header, columns.id);
  const std::size_t text_col = column_index(header, columns.text);
  std::optional<std::size_t> study_col;
  if (const auto it = std::find(header.begin(), header.end(), columns.study); it != header.end()) {
    study_col = static_cast<std::size_t>(it - header.begin());
  }

  LoadedCorpus corpus;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    ++corpus.data_rows;
    if (row.fields.size() != header.size()) {
      corpus.rejects.push_back({row.line, "expected " + std::to_string(header.size()) +
                                              " fields, found " +
                                              std::to_string(row.fields.size())});
      continue;
    }
    OutcomeRecord record;
    record.id = row.fields[id_col];
    record.raw_text = row.fields[text_col];
    record.line = row.line;
    if (study_col && !row.fields[*study_col].empty()) record.study_id = row.fields[*study_col];
    if (record.id.empty()) {
      corpus.rejects.push_back({row.line, "empty id"});
      continue;
    }
    try {
      record.normalized_text = normalize_text(record.raw_text);
    } catch (const Error&) {
      corpus.rejects.push_back({row.line, "empty outcome text"});
      continue;
    }
    if (!seen_ids.insert(record.id).second) {
      corpus.rejects.push_back({row.line, "duplicate id " + record.id});
      continue;
    }
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

LoadedCorpus load_outcomes(const std::filesystem::path& path, InputFormat format,
                           const ColumnNames& columns) {
  return parse_outcomes(csv::read_file(path), format, columns);
}

LoadedCorpus load_outcomes(const std::filesystem::path& path, InputFormat format) {
  return load_outcomes(path, format, ColumnNames::defaults_for(format));
}

std::optional<std::size_t> TaxonomyDef::index_of(std::string_view label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

TaxonomyDef make_taxonomy(std::string name, const std::vector<std::string>& labels) {
  TaxonomyDef def{std::move(name), {}};
  std::unordered_set<std::string> seen;
  for (const auto& label : labels) {
    std::string normalized;
    try {
      normalized = normalize_text(label);
    } catch (const Error&) {
      throw Error(ErrorKind::kTaxonomy, "label '" + label + "' is empty after normalization");
    }
    if (!seen.insert(normalized).second) {
      throw Error(ErrorKind::kTaxonomy, "duplicate label '" + normalized + "'");
    }
    def.labels.push_back(std::move(normalized));
  }
  if (def.labels.size() < 2) {
    throw Error(ErrorKind::kTaxonomy, "taxonomy needs at least 2 labels, got " +
                                          std::to_string(def.labels.size()));
  }
  return def;
}

TaxonomyDef load_taxonomy(const std::string& name_or_path) {
  if (name_or_path == "smith15") return make_taxonomy("smith15", smith15_labels());
  if (name_or_path == "core5") return make_taxonomy("core5", core5_labels());

  const std::filesystem::path path(name_or_path);
  const std::string text = csv::read_file(path);
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) labels.push_back(std::move(line));
    start = end + 1;
  }
  return make_taxonomy(path.stem().string(), labels);
}

}  // namespace outcomenorm
