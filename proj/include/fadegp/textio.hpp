#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fadegp {

// Locale-independent float formatting: the shortest std::to_chars form that
// round-trips exactly.
std::string fmt_double(double v);

// Strict full-string parse; throws ValidationError with `context` on failure.
double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
  // Throws ValidationError naming the missing column.
  std::size_t require_column(const std::string& name, const std::string& file) const;
};

// Comma separated, first row is the header, no quoting or embedded commas.
// Blank lines are skipped; every row must match the header width.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

}  // namespace fadegp
