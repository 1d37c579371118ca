#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace adt {

/// In-memory delimited table. Cells are kept as text; numeric parsing happens
/// at the point of use so validation can report the offending row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;      // throws ConfigError
  bool has_column(const std::string& name) const;
  const std::string& cell(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Parse a cell as double. Empty cells report missing=true. Non-finite or
/// unparseable cells throw DataError naming the location.
double parse_cell(const std::string& cell, const std::string& context, bool* missing);

}  // namespace adt
