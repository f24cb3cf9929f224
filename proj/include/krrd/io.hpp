#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "krrd/types.hpp"

namespace krrd {

/// Shortest 17-significant-digit decimal; round-trips exactly.
std::string format_double(double v);

/// RFC-4180 field quoting.
std::string csv_escape(const std::string& field);
std::string csv_line(const std::vector<std::string>& fields);

/// Minimal RFC-4180 reader (quotes, embedded commas/newlines).
std::vector<std::vector<std::string>> read_csv(const std::string& content);

/// temp-file + rename so readers never observe a partial file
void atomic_write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// FNV-1a 64-bit content digest as hex.
std::string fnv1a_hex(const std::string& content);

struct DataSet {
  Matrix X;
  Vector y;
};

/// Parses a data CSV with header x1,...,xd,y (or x,y for d = 1).
DataSet read_data_csv(const std::string& content);
std::string write_data_csv(const Matrix& X, const Vector& y);

}  // namespace krrd
