#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "arhate/corpus.hpp"

namespace arhate {

struct NormalizationConfig {
  /// One stopword per line. Empty path means no stopword filtering.
  std::filesystem::path stopword_path;
  /// Runs of one repeated character longer than this are cut down to it.
  std::size_t repeat_collapse_len = 2;
  bool strip_non_arabic = true;

  void validate() const;
};

/// Cleans raw tweet text. The rules run in a fixed order:
///   1. mentions, URLs, '#', punctuation, symbols and emoji, digits, and the
///      standalone token "RT" are removed (removed runs become a space);
///   2. harakat, tanween, shadda, sukun and the other Arabic combining marks
///      plus tatweel are deleted;
///   3. character runs longer than repeat_collapse_len are collapsed;
///   4. alef with hamza above/below or madda -> alef, ta marbuta -> ha,
///      alef maqsura -> ya;
///   5. anything that is not an Arabic-block letter or whitespace becomes a
///      space (when strip_non_arabic);
///   6. stopword tokens are dropped;
///   7. whitespace runs become one space and the result is trimmed.
/// The sequence is repeated until the text stops changing, so the result is
/// a fixed point: normalizing it again returns it unchanged.
class Normalizer {
 public:
  /// Loads the stopword file named by the config, if any.
  explicit Normalizer(NormalizationConfig config);
  Normalizer(NormalizationConfig config, const std::vector<std::string>& stopwords);

  std::string normalize(std::string_view raw) const;

  const NormalizationConfig& config() const noexcept { return config_; }
  std::size_t stopword_count() const noexcept { return stopwords_.size(); }
  /// SHA-256 of the stopword file; empty when no file was configured.
  const std::string& stopword_hash() const noexcept { return stopword_hash_; }

 private:
  void add_stopwords(const std::vector<std::string>& words);
  std::u32string single_pass(std::u32string text, bool drop_stopwords) const;

  NormalizationConfig config_;
  std::unordered_set<std::u32string> stopwords_;
  std::string stopword_hash_;
};

std::string normalize_text(std::string_view raw, const NormalizationConfig& config);

/// Fills norm_text on every row and marks it normalized. Rows that end up
/// empty stay in the corpus; LabeledText::usable() reports them.
Corpus normalize_corpus(Corpus corpus, const Normalizer& normalizer);

struct GoldenCase {
  std::string raw;
  std::string expected;
  std::size_t line = 0;
};

/// TSV of raw<TAB>expected, '#' comment lines allowed. Fields may use the
/// escapes \n, \t and \\.
std::vector<GoldenCase> read_golden_tsv(const std::filesystem::path& path);

}  // namespace arhate
