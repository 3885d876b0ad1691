#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arhate::csv {

/// Minimal RFC 4180 reader: quoted fields may contain the delimiter, doubled
/// quotes, and newlines. Tracks the physical line where each record starts.
/// With quoting disabled (plain TSV) a '"' is an ordinary character.
class Reader {
 public:
  Reader(std::istream& in, char delimiter, std::string source_name, bool quoting = true);

  /// Returns the next record, or nullopt at end of input.
  std::optional<std::vector<std::string>> next();

  /// 1-based line on which the last returned record started.
  std::size_t record_line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  char delimiter_;
  std::string source_;
  bool quoting_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field only when it needs it.
std::string escape(std::string_view field, char delimiter = ',');

std::string join(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace arhate::csv
