#include "mcs/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mcs/format.hpp"

namespace mcs {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

// Parses names like "x12"; returns 0 when the name does not match the prefix.
std::size_t column_number(const std::string& name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return 0;
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), value);
  if (ec != std::errc() || ptr != name.data() + name.size()) return 0;
  return value;
}

}  // namespace

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw CsvError(source + ": missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_line(line);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].empty()) throw CsvError(source + ": empty column name at column " + std::to_string(c + 1));
  }
  const std::size_t cols = table.header.size();
  std::vector<double> cells;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_line(line);
    if (parts.size() != cols) {
      throw CsvError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(parts.size()) +
                     " cells, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& cell = parts[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw CsvError(source + ": row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) + " (" +
                       table.header[c] + "): not a finite number: '" + cell + "'");
      }
      cells.push_back(v);
    }
    ++rows;
  }
  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cells[r * cols + c];
    }
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return read_csv(in, path);
}

LabeledDataset table_to_dataset(const CsvTable& table, const std::string& source) {
  std::vector<Eigen::Index> x_cols, y_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (const std::size_t k = column_number(name, 'x'); k == x_cols.size() + 1 && y_cols.empty()) {
      x_cols.push_back(static_cast<Eigen::Index>(c));
    } else if (const std::size_t k2 = column_number(name, 'y'); k2 == y_cols.size() + 1 && !x_cols.empty()) {
      y_cols.push_back(static_cast<Eigen::Index>(c));
    } else {
      throw CsvError(source + ": column " + std::to_string(c + 1) + " ('" + name +
                     "') breaks the expected x1..xp,y1..yd layout");
    }
  }
  if (x_cols.empty()) throw CsvError(source + ": no feature columns (x1..xp)");
  LabeledDataset data;
  data.x = table.values.leftCols(static_cast<Eigen::Index>(x_cols.size()));
  data.y = table.values.rightCols(static_cast<Eigen::Index>(y_cols.size()));
  return data;
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& data) {
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << (j ? "," : "") << 'x' << j + 1;
  for (Eigen::Index j = 0; j < data.y.cols(); ++j) out << ",y" << j + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << (j ? "," : "") << format_double(data.x(i, j));
    for (Eigen::Index j = 0; j < data.y.cols(); ++j) out << ',' << format_double(data.y(i, j));
    out << '\n';
  }
}

void write_features_csv(std::ostream& out, const Matrix& x) {
  write_dataset_csv(out, LabeledDataset{x, Matrix(x.rows(), 0)});
}

}  // namespace mcs
