#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace arhate::unicode {

/// Decodes UTF-8 into code points. Ill-formed sequences become U+FFFD, so
/// the function is total; use is_valid_utf8 to reject input up front.
std::u32string decode(std::string_view utf8);

std::string encode(std::u32string_view code_points);

bool is_valid_utf8(std::string_view bytes) noexcept;

/// Validates UTF-8 and applies NFKC, which folds Arabic presentation forms
/// and ligatures back to their base letters. Throws ValidationError on
/// ill-formed input.
std::string ingest(std::string_view utf8);

bool is_whitespace(char32_t c) noexcept;

/// Splits on Unicode whitespace; empty tokens are never returned.
std::vector<std::string> split_whitespace(std::string_view utf8);

}  // namespace arhate::unicode
