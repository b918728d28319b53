#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcs/types.hpp"

namespace mcs {

/// Malformed CSV input; the message names the offending row and column.
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

/// Comma-separated, '.' decimal point, header line required, every cell numeric.
CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);

/// Splits columns named x1..xp and y1..yd. Responses are optional (zero columns when absent);
/// any other column name is an error.
LabeledDataset table_to_dataset(const CsvTable& table, const std::string& source = "<input>");

void write_dataset_csv(std::ostream& out, const LabeledDataset& data);
void write_features_csv(std::ostream& out, const Matrix& x);

}  // namespace mcs
