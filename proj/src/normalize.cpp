#include "arhate/normalize.hpp"

#include <unicode/uchar.h>

#include <fstream>

#include "arhate/error.hpp"
#include "arhate/hashing.hpp"
#include "arhate/unicode.hpp"

namespace arhate {

namespace {

constexpr char32_t kTatweel = 0x0640;
constexpr char32_t kAlef = 0x0627;
constexpr char32_t kAlefMadda = 0x0622;
constexpr char32_t kAlefHamzaAbove = 0x0623;
constexpr char32_t kAlefHamzaBelow = 0x0625;
constexpr char32_t kTaMarbuta = 0x0629;
constexpr char32_t kHa = 0x0647;
constexpr char32_t kAlefMaqsura = 0x0649;
constexpr char32_t kYa = 0x064A;

// Fathatan..sukun (064B-0652) plus the extended Arabic marks up to 065F and
// the superscript alef.
bool is_diacritic(char32_t c) { return (c >= 0x064B && c <= 0x065F) || c == 0x0670; }

bool is_arabic_letter(char32_t c) {
  return c >= 0x0600 && c <= 0x06FF && u_isalpha(static_cast<UChar32>(c));
}

bool is_space(char32_t c) { return unicode::is_whitespace(c); }

// Punctuation (including '#' and '_'), symbols, emoji and their joiners,
// control and format characters, and digits.
bool is_stripped_in_rule_one(char32_t c) {
  const auto cp = static_cast<UChar32>(c);
  if (is_space(c)) return false;
  const auto mask = U_GET_GC_MASK(cp);
  if (mask & (U_GC_P_MASK | U_GC_S_MASK | U_GC_N_MASK | U_GC_CC_MASK | U_GC_CF_MASK |
              U_GC_CO_MASK | U_GC_CS_MASK | U_GC_CN_MASK | U_GC_ME_MASK)) {
    return true;
  }
  if (u_hasBinaryProperty(cp, UCHAR_EXTENDED_PICTOGRAPHIC) ||
      u_hasBinaryProperty(cp, UCHAR_EMOJI_MODIFIER) ||
      u_hasBinaryProperty(cp, UCHAR_REGIONAL_INDICATOR) ||
      u_hasBinaryProperty(cp, UCHAR_VARIATION_SELECTOR)) {
    return true;
  }
  return false;
}

char32_t ascii_lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

bool starts_with_ci(const std::u32string& s, std::size_t pos, std::u32string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(s[pos + i]) != prefix[i]) return false;
  }
  return true;
}

std::size_t end_of_token(const std::u32string& s, std::size_t pos) {
  while (pos < s.size() && !is_space(s[pos])) ++pos;
  return pos;
}

std::u32string remove_mentions_and_urls(const std::u32string& s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool token_start = i == 0 || is_space(s[i - 1]);
    if (s[i] == U'@' || starts_with_ci(s, i, U"http://") || starts_with_ci(s, i, U"https://") ||
        (token_start && starts_with_ci(s, i, U"www."))) {
      i = end_of_token(s, i);
      out.push_back(U' ');
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

void remove_retweet_markers(std::u32string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    const std::size_t end = end_of_token(s, i);
    if (end - i == 2 && s[i] == U'R' && s[i + 1] == U'T') {
      s[i] = U' ';
      s[i + 1] = U' ';
    }
    i = end;
  }
}

std::u32string collapse_runs(const std::u32string& s, std::size_t limit) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t run = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    run = (i > 0 && s[i] == s[i - 1]) ? run + 1 : 1;
    if (run <= limit) out.push_back(s[i]);
  }
  return out;
}

char32_t unify_letter(char32_t c) {
  switch (c) {
    case kAlefMadda:
    case kAlefHamzaAbove:
    case kAlefHamzaBelow: return kAlef;
    case kTaMarbuta: return kHa;
    case kAlefMaqsura: return kYa;
    default: return c;
  }
}

std::vector<std::u32string> tokens_of(const std::u32string& s) {
  std::vector<std::u32string> tokens;
  std::u32string current;
  for (char32_t c : s) {
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open stopword file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

void NormalizationConfig::validate() const {
  if (repeat_collapse_len < 1) throw ValidationError("repeat_collapse_len must be at least 1");
}

Normalizer::Normalizer(NormalizationConfig config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.stopword_path.empty()) {
    add_stopwords(read_lines(config_.stopword_path));
    stopword_hash_ = sha256_file(config_.stopword_path);
  }
}

Normalizer::Normalizer(NormalizationConfig config, const std::vector<std::string>& stopwords)
    : config_(std::move(config)) {
  config_.validate();
  add_stopwords(stopwords);
}

void Normalizer::add_stopwords(const std::vector<std::string>& words) {
  // Entries go through the character rules so that e.g. a stopword spelled
  // with hamza still matches after alef unification.
  for (const auto& word : words) {
    if (!unicode::is_valid_utf8(word)) throw ValidationError("stopword is not valid UTF-8");
    std::u32string text = unicode::decode(unicode::ingest(word));
    for (int guard = 0; guard < 16; ++guard) {
      auto next = single_pass(text, /*drop_stopwords=*/false);
      if (next == text) break;
      text = std::move(next);
    }
    if (!text.empty() && tokens_of(text).size() == 1) stopwords_.insert(text);
  }
}

std::u32string Normalizer::single_pass(std::u32string text, bool drop_stopwords) const {
  // 1. tweet features, punctuation, symbols, digits
  text = remove_mentions_and_urls(text);
  for (auto& c : text) {
    if (is_stripped_in_rule_one(c)) c = U' ';
  }
  remove_retweet_markers(text);

  // 2. diacritics and tatweel
  std::erase_if(text, [](char32_t c) { return c == kTatweel || is_diacritic(c); });

  // 3. elongation
  text = collapse_runs(text, config_.repeat_collapse_len);

  // 4. letter unification
  for (auto& c : text) c = unify_letter(c);

  // 5. non-Arabic
  if (config_.strip_non_arabic) {
    for (auto& c : text) {
      if (!is_space(c) && !is_arabic_letter(c)) c = U' ';
    }
  }

  // 6 + 7. stopwords, whitespace
  std::u32string out;
  out.reserve(text.size());
  for (auto& token : tokens_of(text)) {
    if (drop_stopwords && stopwords_.contains(token)) continue;
    if (!out.empty()) out.push_back(U' ');
    out += token;
  }
  return out;
}

std::string Normalizer::normalize(std::string_view raw) const {
  std::u32string text = unicode::decode(raw);
  // Removals can expose new matches (a run joined across a deleted
  // character, "RT" formed by dropping a tatweel); every pass only deletes
  // or maps characters one way, so this terminates in a few iterations.
  for (int pass = 0; pass < 32; ++pass) {
    auto next = single_pass(text, /*drop_stopwords=*/true);
    if (next == text) break;
    text = std::move(next);
  }
  return unicode::encode(text);
}

std::string normalize_text(std::string_view raw, const NormalizationConfig& config) {
  return Normalizer(config).normalize(raw);
}

Corpus normalize_corpus(Corpus corpus, const Normalizer& normalizer) {
  for (auto& row : corpus) {
    row.norm_text = normalizer.normalize(row.raw_text);
    row.normalized = true;
  }
  return corpus;
}

namespace {

std::string unescape(const std::string& field, const std::filesystem::path& path,
                     std::size_t line) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\') {
      out.push_back(field[i]);
      continue;
    }
    if (++i == field.size()) throw ParseError(path.string(), line, "dangling backslash");
    switch (field[i]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case '\\': out.push_back('\\'); break;
      default: throw ParseError(path.string(), line, "unknown escape");
    }
  }
  return out;
}

}  // namespace

std::vector<GoldenCase> read_golden_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open golden file " + path.string());
  std::vector<GoldenCase> cases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(path.string(), line_no, "expected exactly two tab-separated fields");
    }
    cases.push_back({unescape(line.substr(0, tab), path, line_no),
                     unescape(line.substr(tab + 1), path, line_no), line_no});
  }
  return cases;
}

}  // namespace arhate
