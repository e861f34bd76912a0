#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sda/linalg.hpp"

namespace sda {

// Parse failure with 1-based line/field location for diagnostics.
struct CsvError : std::runtime_error {
  CsvError(std::string message, std::size_t line, std::size_t field);
  std::size_t line = 0;
  std::size_t field = 0;
};

// Comma-separated numeric matrix; an optional header row is detected by a
// non-numeric first line. Ragged rows or non-numeric cells raise CsvError.
Matrix read_csv_matrix(const std::string& path);

// Square symmetric matrix (no header expected, tolerant of one).
SymMatrix read_csv_sym_matrix(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);

std::string format_double(double value);

// FNV-1a over the raw bytes; used to stamp outputs with a config fingerprint.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace sda
