#include "hgl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hgl {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

NumericCsv read_numeric_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);

  NumericCsv csv;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_line(line);
    if (!have_header) {
      csv.header = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != csv.header.size()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(csv.header.size()) +
                               " columns, got " + std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        row[c] = std::stod(cells[c], &used);
        while (used < cells[c].size() &&
               (cells[c][used] == ' ' || cells[c][used] == '\t'))
          ++used;
        if (used != cells[c].size()) throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": column " +
                                 std::to_string(c + 1) + ": non-numeric cell '" +
                                 cells[c] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw std::runtime_error(path + ": empty file");
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  csv.values.resize(static_cast<int>(rows.size()), static_cast<int>(csv.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      csv.values(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    }
  }
  return csv;
}

void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const Eigen::MatrixXd& values, const std::string& seed_comment) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  if (!seed_comment.empty()) f << "# " << seed_comment << '\n';
  for (std::size_t c = 0; c < header.size(); ++c) {
    f << header[c] << (c + 1 < header.size() ? "," : "");
  }
  f << '\n';
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      f << format_g17(values(r, c)) << (c + 1 < values.cols() ? "," : "");
    }
    f << '\n';
  }
}

}  // namespace hgl
