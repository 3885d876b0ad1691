#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arhate/label.hpp"

namespace arhate {

enum class Origin : std::uint8_t { gold, direct_merge, pseudo };

std::string_view to_string(Origin origin) noexcept;
std::optional<Origin> parse_origin(std::string_view text) noexcept;

struct LabeledText {
  std::string id;
  std::string raw_text;
  std::string norm_text;
  Label label = Label::NH;
  std::string source;
  Origin origin = Origin::gold;
  /// Set once norm_text has been computed; distinguishes "not yet
  /// normalized" from "normalized to nothing".
  bool normalized = false;

  bool empty_after_normalize() const noexcept { return normalized && norm_text.empty(); }
  /// Rows that may enter training or evaluation.
  bool usable() const noexcept { return !empty_after_normalize(); }
};

using Corpus = std::vector<LabeledText>;

enum class DatasetFormat : std::uint8_t { jsonl, csv, tsv };

/// How one external dataset maps onto the five-class taxonomy. A label_map
/// entry holding nullopt means "discard rows with this label".
struct DatasetDescriptor {
  std::string key;
  std::filesystem::path path;
  DatasetFormat format = DatasetFormat::jsonl;
  std::map<std::string, std::optional<Label>> label_map;
  bool hate_only = false;
  // Column names for csv/tsv; jsonl always uses id/text/label.
  std::string id_column = "id";
  std::string text_column = "text";
  std::string label_column = "label";
};

struct LoadResult {
  Corpus rows;
  std::size_t dropped = 0;
};

/// Reads a dataset and maps its labels. Discarded rows (and, for hate_only
/// sources, rows mapped to NH) are dropped and counted. Text is validated as
/// UTF-8 and NFKC-normalized. Throws ParseError on malformed rows and
/// ValidationError on an unmapped label.
LoadResult load_dataset(const DatasetDescriptor& descriptor);

/// Declarative list of datasets; relative paths resolve against the
/// registry file's directory.
std::vector<DatasetDescriptor> load_registry(const std::filesystem::path& path);
const DatasetDescriptor& find_descriptor(const std::vector<DatasetDescriptor>& registry,
                                         std::string_view key);

/// Canonical JSON-lines reader/writer: {id, text, label, source} plus the
/// optional norm_text and origin fields written by later stages.
Corpus read_corpus_jsonl(const std::filesystem::path& path);
void write_corpus_jsonl(const std::filesystem::path& path, const Corpus& corpus);

struct CorpusStats {
  ClassVector<std::size_t> per_class_count{};
  ClassVector<std::size_t> per_class_words{};
  ClassVector<std::size_t> per_class_unique{};
  std::size_t word_count = 0;
  std::size_t unique_words = 0;
  double avg_words_per_text = 0.0;

  std::size_t size() const noexcept;
  double class_avg_words(Label label) const noexcept;
};

/// Whitespace-token statistics over raw_text. Throws ValidationError on an
/// empty corpus or one with no tokens at all.
CorpusStats compute_stats(const Corpus& corpus);

/// Concatenates corpora, qualifying ids as "source:id". With dedup, rows
/// whose non-empty norm_text was already seen are dropped, first occurrence
/// wins. Throws ValidationError on an id collision.
Corpus merge(const std::vector<Corpus>& corpora, bool dedup);

}  // namespace arhate
