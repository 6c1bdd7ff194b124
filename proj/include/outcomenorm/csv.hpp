#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace outcomenorm::csv {

struct Row {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

// RFC-4180 reader: quoted fields may contain the delimiter, doubled quotes and
// line breaks. CRLF and LF endings are both accepted. Blank lines are skipped.
std::vector<Row> parse(std::string_view text, char delimiter = ',');

std::string read_file(const std::filesystem::path& path);

// Quotes a field only when it contains the delimiter, a quote or a line break.
std::string escape(std::string_view field, char delimiter = ',');

std::string join(const std::vector<std::string>& fields, char delimiter = ',');

// Fixed-point rendering with `decimals` digits, locale independent. Values that
// round to zero are written without a sign.
std::string format_fixed(double value, int decimals = 9);

// Shortest representation that round-trips at `digits` significant digits.
std::string format_general(double value, int digits = 9);

// Writes every (name, content) pair into `dir` through temporary files that are
// renamed only once all writes succeeded. On failure nothing new is left behind.
void write_atomically(const std::filesystem::path& dir,
                      const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace outcomenorm::csv
