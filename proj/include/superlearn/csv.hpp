#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "superlearn/error.hpp"

namespace superlearn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline Error csv_parse_error(std::size_t row, std::size_t col, const std::string& msg) {
  return Error("ParseError", ErrorCategory::data,
               "row " + std::to_string(row) + ", column " + std::to_string(col) + ": " + msg);
}

/// RFC-4180 style parsing: comma separated, optional double quotes with ""
/// escapes, LF or CRLF line ends. The first record is the header. Blank
/// trailing lines are ignored.
inline CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
    ++line;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw csv_parse_error(line, record.size() + 1, "stray quote");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw csv_parse_error(line, record.size() + 1, "unterminated quote");
  if (field_started || !field.empty() || !record.empty()) end_record();
  if (records.empty()) throw csv_parse_error(1, 1, "empty file");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw csv_parse_error(r + 1, records[r].size(),
                            "expected " + std::to_string(table.header.size()) + " fields, got " +
                                std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", ErrorCategory::data, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

/// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

/// Accumulates CSV text: "\n" line ends, fields quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) { add(header); }

  void add(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(fields[i]);
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("WriteError", ErrorCategory::data, "cannot write '" + path + "'");
    f << out_.str();
  }

 private:
  std::ostringstream out_;
};

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("WriteError", ErrorCategory::data, "cannot write '" + path + "'");
  f << text;
}

}  // namespace superlearn
