#include "sda/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sda/errors.hpp"

namespace sda {

CsvError::CsvError(std::string message, std::size_t line_no, std::size_t field_no)
    : std::runtime_error(message + " (line " + std::to_string(line_no) + ", field " +
                         std::to_string(field_no) + ")"),
      line(line_no),
      field(field_no) {}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0';
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path, 0, 0);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    // Trim whitespace-only lines at the end of the file.
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    std::size_t bad_field = 0;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      std::string cell = fields[f];
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      if (!parse_double(cell, row[f])) {
        numeric = false;
        bad_field = f + 1;
        break;
      }
    }
    if (!numeric) {
      if (first_content_line) {  // header row
        first_content_line = false;
        continue;
      }
      throw CsvError("non-numeric cell", line_no, bad_field);
    }
    first_content_line = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw CsvError("ragged row", line_no, row.size());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("no numeric rows in " + path, line_no, 0);

  Matrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  return out;
}

SymMatrix read_csv_sym_matrix(const std::string& path) {
  const Matrix m = read_csv_matrix(path);
  if (m.rows() != m.cols()) throw CsvError("matrix in " + path + " is not square", 0, 0);
  return SymMatrix::from_dense(m);
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace sda
