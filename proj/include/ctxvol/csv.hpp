#pragma once

#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ctxvol::csv {

/// One parsed record and the (1-based) physical line it started on.
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
  bool malformed = false; // unterminated quote or stray quote inside a field
};

/// RFC 4180 reader: comma separated, double-quote escaping, quoted fields may
/// span lines. CRLF line endings are accepted.
class Reader {
public:
  explicit Reader(std::istream &in) : in_(in) {}

  std::optional<Record> next() {
    Record rec;
    std::string field;
    bool in_quotes = false, quoted = false, any = false;
    rec.line = line_ + 1;
    int c;
    while ((c = in_.get()) != EOF) {
      any = true;
      char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
        continue;
      }
      if (ch == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
        quoted = false;
      } else if (ch == '\n') {
        ++line_;
        break;
      } else if (ch == '\r' && in_.peek() == '\n') {
        // swallowed, the '\n' ends the record
      } else if (ch == '"') {
        if (field.empty() && !quoted) {
          in_quotes = quoted = true;
        } else {
          rec.malformed = true;
          field.push_back(ch);
        }
      } else {
        if (quoted) rec.malformed = true;
        field.push_back(ch);
      }
    }
    if (!any) return std::nullopt;
    if (in_quotes) rec.malformed = true;
    rec.fields.push_back(std::move(field));
    return rec;
  }

private:
  std::istream &in_;
  std::size_t line_ = 0;
};

inline std::string escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream &out, const std::vector<std::string> &fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

} // namespace ctxvol::csv

namespace ctxvol {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_number(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

} // namespace ctxvol
