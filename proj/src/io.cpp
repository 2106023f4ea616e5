#include "mlop/io.hpp"

#include "mlop/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mlop {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t column) {
  cell = trim(cell);
  if (cell.empty()) throw ParseError("empty cell", row, column);
  // from_chars rejects a leading '+', accept it for robustness.
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("non-numeric cell '" + std::string(cell) + "'", row, column);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite value", row, column);
  return value;
}

Matrix parse_matrix(std::string_view text) {
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;

    Index count = 0;
    std::size_t column = 0;
    while (true) {
      const auto comma = line.find(',');
      ++column;
      values.push_back(parse_cell(line.substr(0, comma), line_no, column));
      ++count;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError("ragged row: expected " + std::to_string(cols) + " columns, found " +
                           std::to_string(count),
                       line_no, 0);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("empty file", 0, 0);
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index k = 0; k < m.cols(); ++k) {
      if (k > 0) out.push_back(',');
      const int len = std::snprintf(buf, sizeof buf, "%.17g", m(i, k));
      out.append(buf, static_cast<std::size_t>(len));
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return buf.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

PointCloud parse_cloud(std::string_view text) { return PointCloud(parse_matrix(text)); }

PointCloud load_cloud(const std::filesystem::path& path) {
  return parse_cloud(read_text(path));
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  write_text(path, format_matrix(cloud.points()));
}

Matrix load_matrix(const std::filesystem::path& path) { return parse_matrix(read_text(path)); }

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  if (m.size() == 0) throw IoError("refusing to write an empty matrix to '" + path.string() + "'");
  write_text(path, format_matrix(m));
}

}  // namespace mlop
