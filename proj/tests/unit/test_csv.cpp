#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "curverl/csv.hpp"

using namespace curverl;

TEST_CASE("17 significant digits round trip", "[csv]") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.1 + 0.2, std::nextafter(1.0, 2.0)}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("writer and reader agree", "[csv]") {
  const auto path = std::filesystem::temp_directory_path() / "curverl_csv_test.csv";
  {
    std::ofstream out(path);
    CsvWriter csv(out, {"step", "scheme", "value"});
    csv.field(std::size_t{3}).field("grpo").field(0.1);
    csv.end_row();
    csv.field(-4LL).field("maxrl").field(2.0);
    csv.end_row();
  }
  const auto table = read_csv(path);
  CHECK(table.header == std::vector<std::string>{"step", "scheme", "value"});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0][table.column("scheme")] == "grpo");
  CHECK(std::stod(table.rows[0][table.column("value")]) == 0.1);
  CHECK(table.rows[1][0] == "-4");
  CHECK_THROWS_AS(table.column("missing"), std::invalid_argument);
  std::filesystem::remove(path);
  CHECK_THROWS(read_csv(path));
}
