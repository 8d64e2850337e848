#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hdbeta {

/// Minimal RFC-4180 style CSV: comma separated, optional double quotes,
/// header row required.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");

double parse_double(std::string_view text, std::string_view context);
long long parse_integer(std::string_view text, std::string_view context);

/// Shortest round-trip-safe text for a double (17 significant digits).
std::string format_double(double value);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

/// Reads a whole file; throws InputError naming the path if it cannot be opened.
std::string read_file(const std::string& path);

/// Hex FNV-1a digest of a file's bytes, used in run manifests.
std::string file_digest(const std::string& path);

}  // namespace hdbeta
