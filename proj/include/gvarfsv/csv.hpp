#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gvarfsv {

// Minimal RFC-4180-style CSV: comma separated, optional double quotes, header row required.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
  int require_column(const std::string& name, const std::string& source) const;
};

CsvTable parse_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::string& path);

/// Rejects columns outside `known` (unless permissive) and requires every
/// name in `required`.
void check_columns(const CsvTable& table, const std::vector<std::string>& required,
                   const std::vector<std::string>& known, bool permissive, const std::string& source);

double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);

std::string csv_escape(const std::string& field);
// Shortest representation that reads back to the same double.
std::string format_double(double v);

}  // namespace gvarfsv
