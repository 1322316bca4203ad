#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leakprobe::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and line
// breaks. CRLF and LF record terminators are both accepted.
class Reader {
public:
  explicit Reader(std::istream& in) : in_(&in) {}

  std::optional<Row> next();
  std::size_t line() const { return line_; }

private:
  std::istream* in_;
  std::size_t line_ = 0;
};

std::vector<Row> read_all(std::istream& in);

// Quotes a field only when it needs it.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

} // namespace leakprobe::csv
