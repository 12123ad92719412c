#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

#include "fadegp/errors.hpp"
#include "fadegp/textio.hpp"

using namespace fadegp;

namespace {
std::string tmp_path(const std::string& name) { return "/tmp/fadegp_textio_" + name; }
}  // namespace

TEST_CASE("fmt_double round-trips doubles exactly") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(mant(rng), expo(rng));
    CHECK(parse_double(fmt_double(v), "t") == v);
  }
  CHECK(parse_double(fmt_double(0.0), "t") == 0.0);
  CHECK(fmt_double(1.0) == "1");
  CHECK(fmt_double(0.1) == "0.1");
}

TEST_CASE("parse_double rejects junk") {
  CHECK_THROWS_AS(parse_double("", "t"), ValidationError);
  CHECK_THROWS_AS(parse_double("1.2x", "t"), ValidationError);
  CHECK_THROWS_AS(parse_double("--3", "t"), ValidationError);
  CHECK_THROWS_AS(parse_double("1,2", "t"), ValidationError);
  CHECK(parse_double("-1.5e-3", "t") == -1.5e-3);
}

TEST_CASE("parse_long strictness") {
  CHECK(parse_long("42", "t") == 42);
  CHECK(parse_long("-7", "t") == -7);
  CHECK_THROWS_AS(parse_long("42.0", "t"), ValidationError);
  CHECK_THROWS_AS(parse_long("", "t"), ValidationError);
}

TEST_CASE("csv round-trip preserves cells") {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x"}, {"2.5", "y z"}};
  const std::string path = tmp_path("rt.csv");
  write_csv(path, t);
  const CsvTable back = read_csv(path);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  std::remove(path.c_str());
}

TEST_CASE("csv handles CRLF and blank lines, rejects ragged rows") {
  const std::string path = tmp_path("crlf.csv");
  write_text_file(path, "a,b\r\n1,2\r\n\r\n3,4\r\n");
  const CsvTable t = read_csv(path);
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[1][1] == "4");
  write_text_file(path, "a,b\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(path), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("column lookup") {
  CsvTable t;
  t.header = {"id", "y1"};
  CHECK(t.column("y1").value() == 1);
  CHECK(!t.column("nope").has_value());
  CHECK(t.require_column("id", "f.csv") == 0);
  CHECK_THROWS_AS(t.require_column("nope", "f.csv"), ValidationError);
}

TEST_CASE("missing file raises") {
  CHECK_THROWS_AS(read_csv("/tmp/fadegp_does_not_exist_42.csv"), ValidationError);
  CHECK(!file_exists("/tmp/fadegp_does_not_exist_42.csv"));
}

TEST_CASE("split and trim") {
  CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split("", ',') == std::vector<std::string>{""});
  CHECK(trim("  x \t") == "x");
  CHECK(trim("") == "");
}

TEST_CASE("write_text_file creates parent directories") {
  const std::string path = "/tmp/fadegp_textio_dir/sub/f.txt";
  write_text_file(path, "hi");
  CHECK(read_text_file(path) == "hi");
  std::remove(path.c_str());
}
