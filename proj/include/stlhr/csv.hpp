#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace stlhr::csv {

/// Header plus string cells. Quoted fields ("a,b", "" escapes) are accepted.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws DataError if absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

Table parse(std::string_view text);
Table read_file(const std::string& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format(double value);

/// Strict numeric parse of a whole cell; returns false on junk or empty input.
bool parse_double(std::string_view cell, double& out);

void write_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace stlhr::csv
