#include "freespectra/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "freespectra/error.hpp"

namespace fsp {

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

double parse_field(std::string_view field, int line, int column) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("malformed number '" + std::string(field) + "'", line, column);
  }
  return v;
}

}  // namespace

CMatrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<cplx>> rows;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos || text[0] == '#') continue;
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      const auto end = comma == std::string::npos ? text.size() : comma;
      fields.push_back(parse_field(std::string_view(text).substr(start, end - start), line,
                                   static_cast<int>(start) + 1));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() % 2 != 0) {
      throw ParseError("odd number of columns; expected re,im pairs", line, 1);
    }
    std::vector<cplx> row;
    for (std::size_t k = 0; k < fields.size(); k += 2) row.emplace_back(fields[k], fields[k + 1]);
    rows.push_back(std::move(row));
  }
  const auto n = rows.size();
  CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw SizeError("matrix CSV is not square: row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

CMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file " + path.string());
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const CMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file " + path.string());
  write_matrix_csv(out, m);
}

nlohmann::json matrix_to_json(const CMatrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("matrix JSON must be an array of rows", 0, 0);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw SizeError("matrix JSON rows have unequal lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = row[static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2) throw ParseError("matrix entry must be [re, im]", 0, 0);
      m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

}  // namespace fsp
