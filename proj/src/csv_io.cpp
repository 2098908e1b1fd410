#include "semicr/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace semicr {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  if (cell == "Inf" || cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "NA" || cell == "nan" || cell == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = cell.data();
  if (!cell.empty() && cell.front() == '+') ++first;
  auto res = std::from_chars(first, cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::SchemaError,
                "line " + std::to_string(line) + ": column '" + column + "' is not a number: '" + cell + "'");
  }
  return v;
}

int parse_binary(const std::string& cell, std::size_t line, const std::string& column) {
  const double v = parse_number(cell, line, column);
  if (v != 0.0 && v != 1.0) {
    throw Error(ErrorCode::SchemaError,
                "line " + std::to_string(line) + ": column '" + column + "' must be 0 or 1");
  }
  return static_cast<int>(v);
}

}  // namespace

Cohort parse_cohort_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "missing header");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_line(line);

  static const char* const required[] = {"id", "x1", "x2", "delta1", "delta2", "a"};
  for (std::size_t k = 0; k < 6; ++k) {
    if (k >= header.size() || header[k] != required[k]) {
      const bool present = std::find(header.begin(), header.end(), required[k]) != header.end();
      throw Error(ErrorCode::SchemaError,
                  present ? std::string("column '") + required[k] + "' must be column " + std::to_string(k + 1)
                          : std::string("missing column '") + required[k] + "'");
    }
  }
  std::vector<std::string> covariates;
  bool has_weight = false;
  for (std::size_t k = 6; k < header.size(); ++k) {
    if (header[k] == "weight" && k + 1 == header.size()) {
      has_weight = true;
    } else if (header[k] == "z" + std::to_string(covariates.size() + 1)) {
      covariates.push_back(header[k]);
    } else {
      throw Error(ErrorCode::SchemaError, "unexpected column '" + header[k] + "'");
    }
  }

  std::vector<SubjectRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(cells.size()));
    }
    SubjectRecord s;
    s.id = cells[0];
    s.x1 = parse_number(cells[1], line_no, "x1");
    s.x2 = parse_number(cells[2], line_no, "x2");
    s.delta1 = parse_binary(cells[3], line_no, "delta1");
    s.delta2 = parse_binary(cells[4], line_no, "delta2");
    s.a = parse_binary(cells[5], line_no, "a");
    for (std::size_t j = 0; j < covariates.size(); ++j) {
      s.z.push_back(parse_number(cells[6 + j], line_no, covariates[j]));
    }
    if (has_weight) s.weight = parse_number(cells.back(), line_no, "weight");
    rows.push_back(std::move(s));
  }
  return validate_cohort(std::move(rows), std::move(covariates));
}

Cohort read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_cohort_csv(in);
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort, bool include_weight) {
  out << "id,x1,x2,delta1,delta2,a";
  for (const auto& name : cohort.covariate_names()) out << ',' << name;
  if (include_weight) out << ",weight";
  out << '\n';
  for (const auto& s : cohort.subjects()) {
    out << s.id << ',' << format_double(s.x1) << ',' << format_double(s.x2) << ',' << s.delta1 << ','
        << s.delta2 << ',' << s.a;
    for (double v : s.z) out << ',' << format_double(v);
    if (include_weight) out << ',' << format_double(s.weight);
    out << '\n';
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace semicr
