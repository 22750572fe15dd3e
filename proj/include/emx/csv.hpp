#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "emx/error.hpp"

namespace emx::csv {

/// One parsed cell. An unquoted empty cell is "missing"; a quoted empty cell
/// ("") is an empty string.
struct Cell {
  std::string text;
  bool missing = false;
};

using Row = std::vector<Cell>;

/// RFC-4180 parser. Accepts LF or CRLF line ends and quoted fields spanning
/// lines.
inline std::vector<Row> parse(std::string_view data) {
  std::vector<Row> rows;
  Row row;
  Cell cell;
  bool quoted = false;
  bool was_quoted = false;
  bool row_has_content = false;
  std::size_t i = 0;
  auto end_cell = [&] {
    cell.missing = !was_quoted && cell.text.empty();
    row.push_back(std::move(cell));
    cell = Cell{};
    was_quoted = false;
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };
  while (i < data.size()) {
    char c = data[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          cell.text.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
        continue;
      }
      cell.text.push_back(c);
      ++i;
      continue;
    }
    if (c == '"') {
      quoted = true;
      was_quoted = true;
      row_has_content = true;
      ++i;
    } else if (c == ',') {
      row_has_content = true;
      end_cell();
      ++i;
    } else if (c == '\r' || c == '\n') {
      if (row_has_content || !cell.text.empty()) end_row();
      if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') ++i;
      ++i;
    } else {
      row_has_content = true;
      cell.text.push_back(c);
      ++i;
    }
  }
  if (quoted) throw ValidationError("csv: unterminated quoted field");
  if (row_has_content || !cell.text.empty()) end_row();
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<Row> read(const std::string& path) { return parse(read_file(path)); }

/// Quotes when needed; a missing cell is written empty and unquoted, an
/// empty string as "".
inline void write_cell(std::ostream& out, const Cell& c) {
  if (c.missing) return;
  bool needs_quotes = c.text.empty() ||
                      c.text.find_first_of(",\"\r\n") != std::string::npos ||
                      c.text.front() == ' ' || c.text.back() == ' ';
  if (!needs_quotes) {
    out << c.text;
    return;
  }
  out << '"';
  for (char ch : c.text) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

inline void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    write_cell(out, row[i]);
  }
  out << "\r\n";
}

}  // namespace emx::csv
