#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace collabperf::csv {

/// One parsed record with its 1-based line number in the source.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

/// RFC 4180-style reader: quoted cells, doubled quotes, CRLF tolerated.
/// Blank lines are skipped. Throws ParseError on an unterminated quote.
std::vector<Row> read(std::istream& in);
std::vector<Row> read_file(const std::string& path);

std::string escape(std::string_view cell);
void write_row(std::ostream& out, const std::vector<std::string>& cells);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Parses a whole cell as a finite double; false on trailing garbage.
bool parse_double(std::string_view text, double& out);

std::string trim(std::string_view s);

/// FNV-1a 64-bit, used for dataset and schema fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);

}  // namespace collabperf::csv
