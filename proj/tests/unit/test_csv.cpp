#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"
#include "collabperf/rng.hpp"

using namespace collabperf;

TEST_CASE("quoted cells, doubled quotes and CRLF") {
  std::istringstream in("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\r\nx,,\"multi\nline\"\n");
  const auto rows = csv::read(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].cells == std::vector<std::string>{"a", "b,c", "say \"hi\""});
  CHECK(rows[0].line == 1);
  CHECK(rows[1].cells == std::vector<std::string>{"x", "", "multi\nline"});
  CHECK(rows[1].line == 3);
}

TEST_CASE("unterminated quote is a parse error") {
  std::istringstream in("a,\"open\n");
  CHECK_THROWS_AS(csv::read(in), ParseError);
}

TEST_CASE("utf-8 byte order mark is ignored") {
  std::istringstream in("\xEF\xBB\xBFmodel,task\n");
  const auto rows = csv::read(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].cells[0] == "model");
}

TEST_CASE("write_row then read returns the same cells") {
  Rng rng(7);
  const std::string alphabet = "ab,\"\n x-1.";
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> cells(1 + rng.below(5));
    for (auto& c : cells) {
      const auto len = rng.below(6);
      for (std::uint64_t k = 0; k < len; ++k) c += alphabet[rng.below(alphabet.size())];
    }
    // A lone empty cell is an empty line, which the reader skips.
    if (cells.size() == 1 && cells[0].empty()) cells[0] = "z";
    std::ostringstream out;
    csv::write_row(out, cells);
    std::istringstream in(out.str());
    const auto rows = csv::read(in);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].cells == cells);
  }
}

TEST_CASE("doubles round-trip through their shortest text") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
    double back = 0.0;
    REQUIRE(csv::parse_double(csv::format_double(v), back));
    CHECK(back == v);
  }
  CHECK(csv::format_double(0.5) == "0.5");
}

TEST_CASE("parse_double rejects garbage and non-finite values") {
  double v = 0.0;
  CHECK_FALSE(csv::parse_double("0.5x", v));
  CHECK_FALSE(csv::parse_double("", v));
  CHECK_FALSE(csv::parse_double("nan", v));
  CHECK_FALSE(csv::parse_double("inf", v));
  CHECK(csv::parse_double(" 0.25 ", v));
  CHECK(v == 0.25);
}

TEST_CASE("fnv1a matches the published test vector") {
  CHECK(csv::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(csv::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(csv::hex64(0xabcULL) == "0000000000000abc");
}
