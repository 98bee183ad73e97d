#include "ldgp/errors.hpp"
#include "ldgp/io.hpp"

#include <doctest.h>

#include <filesystem>

using namespace ldgp;

TEST_SUITE("io") {

TEST_CASE("csv with quoted header fields") {
  const Table t = parse_csv("\"x, one\",y\r\n1.5,2\n-3e-2,4\n");
  CHECK(t.header == std::vector<std::string>{"x, one", "y"});
  REQUIRE(t.values.rows() == 2);
  CHECK(t.values(1, 0) == -0.03);
  CHECK(t.values(1, 1) == 4.0);
}

TEST_CASE("csv errors name the row and column") {
  CHECK_THROWS_AS(parse_csv(""), ValidationError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ValidationError);
  try {
    parse_csv("a,b\n1,2\n3,x\n");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
}

TEST_CASE("header-only csv has no rows") {
  const Table t = parse_csv("x1,x2\n");
  CHECK(t.values.rows() == 0);
  CHECK(t.values.cols() == 2);
}

TEST_CASE("formatted numbers round trip exactly") {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, 1.0 / 3.0, -2.5e-300, 12345678.9;
  const Table t = parse_csv(format_csv({"a", "b"}, m));
  CHECK(t.values == m);
  CHECK(format_csv({{"a", "b,c"}}) == "a,\"b,c\"\n");
}

TEST_CASE("files and exit codes") {
  const auto dir = std::filesystem::temp_directory_path() / "ldgp_io_test";
  std::filesystem::remove_all(dir);
  write_text(dir / "sub" / "f.txt", "hello");
  CHECK(read_text(dir / "sub" / "f.txt") == "hello");
  CHECK_THROWS_AS(read_text(dir / "missing.txt"), IoError);
  write_text(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(read_json(dir / "bad.json"), ValidationError);
  CHECK(exit_code_for(ValidationError("v")) == 2);
  CHECK(exit_code_for(NumericalError("n")) == 3);
  CHECK(exit_code_for(IoError("i")) == 4);
  CHECK(exit_code_for(std::runtime_error("r")) == 1);
  std::filesystem::remove_all(dir);
}

}
