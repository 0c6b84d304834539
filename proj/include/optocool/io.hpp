#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace optocool::io {

/// Shortest round-trip decimal representation, locale-independent.
std::string format_number(double x);

/// Strict full-string parse of a double; throws ConfigError naming `key`.
double parse_number(std::string_view text, std::string_view key);

/// One table of named numeric columns plus comment-header lines.
struct Table {
  std::vector<std::string> header;  // "key = value" lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// CSV: each header line prefixed by "# ", then the column names, then rows.
void write_csv(std::ostream& out, const Table& table);

/// JSON object {"header": {...}, "columns": [...], "rows": [[...]]}; numbers
/// that are not finite are written as null.
void write_json(std::ostream& out, const Table& table);

}  // namespace optocool::io
