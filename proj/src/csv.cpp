#include "arhate/csv.hpp"

#include "arhate/error.hpp"

namespace arhate::csv {

Reader::Reader(std::istream& in, char delimiter, std::string source_name, bool quoting)
    : in_(in), delimiter_(delimiter), source_(std::move(source_name)), quoting_(quoting) {}

std::optional<std::vector<std::string>> Reader::next() {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool any = false;
  record_line_ = line_;

  for (;;) {
    int ch = in_.get();
    if (ch == std::char_traits<char>::eof()) {
      if (in_quotes) throw ParseError(source_, record_line_, "unterminated quoted field");
      if (!any) return std::nullopt;
      fields.push_back(std::move(field));
      return fields;
    }
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && quoting_) {
      if (!field.empty() || field_was_quoted) {
        throw ParseError(source_, line_, "stray quote inside unquoted field");
      }
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == delimiter_) {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '\r') {
      if (in_.peek() != '\n') field.push_back(c);
    } else if (c == '\n') {
      ++line_;
      fields.push_back(std::move(field));
      return fields;
    } else {
      if (field_was_quoted) throw ParseError(source_, line_, "text after closing quote");
      field.push_back(c);
    }
  }
}

std::string escape(std::string_view field, char delimiter) {
  const bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                            std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(delimiter);
    out += escape(fields[i], delimiter);
  }
  return out;
}

}  // namespace arhate::csv
