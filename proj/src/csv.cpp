#include "leakprobe/csv.hpp"

#include "leakprobe/errors.hpp"

namespace leakprobe::csv {

std::optional<Row> Reader::next() {
  int c = in_->get();
  if (c == std::char_traits<char>::eof())
    return std::nullopt;
  ++line_;

  Row row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (;; c = in_->get()) {
    if (c == std::char_traits<char>::eof()) {
      if (quoted)
        throw IoError("csv: unterminated quoted field at line " + std::to_string(line_));
      break;
    }
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_->peek() == '"') {
          in_->get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n')
          ++line_;
        field += ch;
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\r' && in_->peek() == '\n') {
      continue;
    } else if (ch == '\n') {
      break;
    } else {
      field += ch;
      field_started = true;
    }
  }
  row.push_back(std::move(field));
  return row;
}

std::vector<Row> read_all(std::istream& in) {
  Reader reader(in);
  std::vector<Row> rows;
  while (auto row = reader.next())
    rows.push_back(std::move(*row));
  return rows;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos)
    return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i)
      out += ',';
    out += escape(row[i]);
  }
  return out;
}

} // namespace leakprobe::csv
