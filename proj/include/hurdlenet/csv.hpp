#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hurdlenet::csv {

/// Plain comma-separated table: no quoting, first line is the header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or -1.
  int column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep = ',');

double to_double(const std::string& field, const std::filesystem::path& source, std::size_t line);

/// Shortest representation that round-trips a double.
std::string format(double value);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace hurdlenet::csv
