#include <sstream>

#include "doctest.h"
#include "mcs/csv.hpp"
#include "test_helpers.hpp"

using namespace mcs;

namespace {

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    table_to_dataset(read_csv(in, "data.csv"), "data.csv");
  } catch (const CsvError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("datasets round-trip through CSV") {
  Rng rng(4);
  LabeledDataset data{test::random_matrix(5, 3, rng), test::random_matrix(5, 2, rng)};
  data.x(0, 0) = 0.1;
  std::stringstream text;
  write_dataset_csv(text, data);
  CHECK(text.str().rfind("x1,x2,x3,y1,y2\n0.1,", 0) == 0);
  const LabeledDataset back = table_to_dataset(read_csv(text));
  CHECK(back.x == data.x);
  CHECK(back.y == data.y);
}

TEST_CASE("feature-only CSV has no responses") {
  std::istringstream in("\xEF\xBB\xBFx1,x2\r\n1,2\r\n\r\n3, 4\r\n");
  const LabeledDataset data = table_to_dataset(read_csv(in));
  CHECK(data.size() == 2);
  CHECK(data.response_dim() == 0);
  CHECK(data.x(1, 1) == 4.0);
  std::ostringstream out;
  write_features_csv(out, data.x);
  CHECK(out.str() == "x1,x2\n1,2\n3,4\n");
}

TEST_CASE("header-only CSV gives zero rows") {
  std::istringstream in("x1,y1\n");
  const LabeledDataset data = table_to_dataset(read_csv(in));
  CHECK(data.size() == 0);
  CHECK(data.x.cols() == 1);
  CHECK(data.y.cols() == 1);
}

TEST_CASE("malformed input names the row and column") {
  CHECK(error_of("x1,y1\n1,abc\n").find("row 2, column 2") != std::string::npos);
  CHECK(error_of("x1,y1\n1,2\n3\n").find("row 3") != std::string::npos);
  CHECK(error_of("x1,y1\n1,nan\n").find("column 2") != std::string::npos);
  CHECK(error_of("x1,y1\n1,\n").find("column 2") != std::string::npos);
  CHECK(error_of("x1,z1\n1,2\n").find("column 2") != std::string::npos);
  CHECK(error_of("y1,x1\n1,2\n").find("column 1") != std::string::npos);
  CHECK(error_of("x2,x1\n1,2\n").find("column 1") != std::string::npos);
  CHECK(error_of("x1,,y1\n1,2,3\n").find("column 2") != std::string::npos);
  CHECK_FALSE(error_of("").empty());
  CHECK_THROWS_AS(read_csv_file("/nonexistent/file.csv"), CsvError);
}
