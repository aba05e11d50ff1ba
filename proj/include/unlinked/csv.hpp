#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <stdexcept>
#include <string>
#include <vector>

#include "unlinked/dataset.hpp"

namespace unlinked {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  if (std::strtod(buf, nullptr) != x) return buf;  // NaN lands here
  std::string best = buf;
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
    if (std::strtod(shorter, nullptr) == x && std::string_view(shorter).size() < best.size())
      best = shorter;
  }
  return best;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_row(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
      throw std::invalid_argument("row width does not match the header");
    write_row(cells);
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("flush failed while closing a table");
  }

 private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (line_no == 1) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size())
        throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                                 ": expected " + std::to_string(table.header.size()) +
                                 " cells, found " + std::to_string(cells.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

/// Like parse_double, but errors name the file and the 1-based data line.
inline double parse_cell(const std::vector<std::string>& row, std::size_t col,
                         const std::filesystem::path& path, std::size_t row_idx) {
  try {
    return parse_double(row[col]);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": line " + std::to_string(row_idx + 2) + ": " +
                             e.what());
  }
}

/// Columns x1..xd then y, one observation per row.
inline void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  const std::size_t d = ds.covariates.cols();
  std::vector<std::string> header;
  for (std::size_t k = 0; k < d; ++k) header.push_back("x" + std::to_string(k + 1));
  header.emplace_back("y");
  CsvWriter writer(path, header);
  std::vector<std::string> cells(d + 1);
  for (std::size_t i = 0; i < ds.covariates.rows(); ++i) {
    for (std::size_t k = 0; k < d; ++k) cells[k] = format_double(ds.covariates(i, k));
    cells[d] = format_double(ds.responses[i]);
    writer.row(cells);
  }
  writer.close();
}

inline Dataset load_dataset(const std::filesystem::path& path, double sigma) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.back() != "y")
    throw std::runtime_error("expected covariate columns followed by a final y column");
  const std::size_t d = table.header.size() - 1;
  if (d == 0) throw std::runtime_error("no covariate columns in " + path.string());
  if (table.rows.empty()) throw std::runtime_error("no observations in " + path.string());
  Dataset ds;
  ds.sigma = sigma;
  ds.covariates = Matrix(table.rows.size(), d);
  ds.responses.resize(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) ds.covariates(i, k) = parse_cell(table.rows[i], k, path, i);
    ds.responses[i] = parse_cell(table.rows[i], d, path, i);
  }
  return ds;
}

}  // namespace unlinked
