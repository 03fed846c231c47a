#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rashomon/common.hpp"

namespace rashomon::csv {

// Splits one CSV record. Handles double-quoted fields with "" escapes; a
// trailing CR (Windows line endings) is dropped.
inline std::vector<std::string> split_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> records;

  // Column index by header name, or npos.
  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return npos;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline Table read(std::istream& in) {
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      // Strip a UTF-8 byte order mark.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      table.header = split_record(line);
      first = false;
      continue;
    }
    if (line.empty() || line == "\r") continue;
    table.records.push_back(split_record(line));
  }
  return table;
}

inline Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return read(in);
}

// Quotes a field only when it contains a separator, quote or newline.
inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Fixed-precision decimal formatting; locale independent and byte stable.
inline std::string fixed(double value, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  std::string s(buf);
  if (s.rfind("-0.", 0) == 0 && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((emit(first, fields)), ...);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) emit(first, f);
    out_ << '\n';
  }

 private:
  void emit(bool& first, std::string_view field) {
    if (!first) out_ << ',';
    first = false;
    out_ << escape(field);
  }

  std::ostream& out_;
};

}  // namespace rashomon::csv
