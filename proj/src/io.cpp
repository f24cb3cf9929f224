#include "krrd/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "krrd/errors.hpp"

namespace krrd {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  out += '\n';
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  const std::size_t n = content.size();
  auto end_field = [&] { row.push_back(std::move(field)); field.clear(); };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < n) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(const std::string& content) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : content) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DataSet read_data_csv(const std::string& content) {
  const auto rows = read_csv(content);
  if (rows.size() < 2) throw IoError("data csv: need a header and at least one row");
  const auto& header = rows[0];
  if (header.size() < 2 || header.back() != "y")
    throw IoError("data csv: header must be x1,...,xd,y");
  const Index d = static_cast<Index>(header.size()) - 1;
  for (Index c = 0; c < d; ++c) {
    const std::string expect1 = "x" + std::to_string(c + 1);
    if (header[static_cast<std::size_t>(c)] != expect1 &&
        !(d == 1 && header[0] == "x"))
      throw IoError("data csv: header must be x1,...,xd,y (got '" +
                    header[static_cast<std::size_t>(c)] + "')");
  }
  const Index n = static_cast<Index>(rows.size()) - 1;
  DataSet ds;
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i) + 1];
    if (static_cast<Index>(row.size()) != d + 1)
      throw IoError("data csv: row " + std::to_string(i + 2) + " has " +
                    std::to_string(row.size()) + " fields, expected " + std::to_string(d + 1));
    for (Index c = 0; c <= d; ++c) {
      const std::string& f = row[static_cast<std::size_t>(c)];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v))
        throw IoError("data csv: bad numeric field '" + f + "' in row " + std::to_string(i + 2));
      if (c < d)
        ds.X(i, c) = v;
      else
        ds.y[i] = v;
    }
  }
  return ds;
}

std::string write_data_csv(const Matrix& X, const Vector& y) {
  std::string out;
  std::vector<std::string> header;
  for (Index c = 0; c < X.cols(); ++c) header.push_back("x" + std::to_string(c + 1));
  header.push_back("y");
  out += csv_line(header);
  for (Index i = 0; i < X.rows(); ++i) {
    std::vector<std::string> row;
    for (Index c = 0; c < X.cols(); ++c) row.push_back(format_double(X(i, c)));
    row.push_back(format_double(y[i]));
    out += csv_line(row);
  }
  return out;
}

}  // namespace krrd
