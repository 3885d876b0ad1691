#include "arhate/corpus.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <json.hpp>
#include <set>
#include <unordered_set>

#include "arhate/csv.hpp"
#include "arhate/error.hpp"
#include "arhate/unicode.hpp"

namespace arhate {

using nlohmann::json;

std::string_view to_string(Origin origin) noexcept {
  switch (origin) {
    case Origin::gold: return "gold";
    case Origin::direct_merge: return "direct_merge";
    case Origin::pseudo: return "pseudo";
  }
  return "gold";
}

std::optional<Origin> parse_origin(std::string_view text) noexcept {
  if (text == "gold") return Origin::gold;
  if (text == "direct_merge") return Origin::direct_merge;
  if (text == "pseudo") return Origin::pseudo;
  return std::nullopt;
}

namespace {

struct RawRow {
  std::string id;
  std::string text;
  std::string label;
  std::size_t line;
};

std::vector<RawRow> read_jsonl_rows(const DatasetDescriptor& d, std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  const std::string name = d.path.string();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(name, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(name, line_no, "expected a JSON object");
    for (const char* field : {"id", "text", "label"}) {
      if (!obj.contains(field) || !obj[field].is_string()) {
        throw ParseError(name, line_no, std::string("missing string field '") + field + "'");
      }
    }
    rows.push_back({obj["id"].get<std::string>(), obj["text"].get<std::string>(),
                    obj["label"].get<std::string>(), line_no});
  }
  return rows;
}

std::vector<RawRow> read_delimited_rows(const DatasetDescriptor& d, std::istream& in) {
  const bool tsv = d.format == DatasetFormat::tsv;
  const std::string name = d.path.string();
  csv::Reader reader(in, tsv ? '\t' : ',', name, /*quoting=*/!tsv);
  auto header = reader.next();
  if (!header) return {};

  auto column = [&](const std::string& wanted) -> std::optional<std::size_t> {
    if (wanted.empty()) return std::nullopt;
    for (std::size_t i = 0; i < header->size(); ++i) {
      if ((*header)[i] == wanted) return i;
    }
    throw ParseError(name, reader.record_line(), "missing column '" + wanted + "'");
  };
  const auto id_col = column(d.id_column);
  const auto text_col = column(d.text_column);
  const auto label_col = column(d.label_column);

  std::vector<RawRow> rows;
  while (auto record = reader.next()) {
    const std::size_t line = reader.record_line();
    if (record->size() == 1 && (*record)[0].empty()) continue;  // blank line
    if (record->size() != header->size()) {
      throw ParseError(name, line,
                       "expected " + std::to_string(header->size()) + " fields, got " +
                           std::to_string(record->size()));
    }
    RawRow row;
    row.id = id_col ? (*record)[*id_col] : "r" + std::to_string(line);
    row.text = (*record)[*text_col];
    row.label = (*record)[*label_col];
    row.line = line;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<Label> map_label(const DatasetDescriptor& d, const RawRow& row, bool& discard) {
  discard = false;
  if (d.label_map.empty()) {
    if (auto l = parse_label(row.label)) return l;
  } else if (auto it = d.label_map.find(row.label); it != d.label_map.end()) {
    if (!it->second) discard = true;
    return it->second;
  }
  throw ValidationError(d.path.string() + ":" + std::to_string(row.line) +
                        ": unmapped label '" + row.label + "' in dataset '" + d.key + "'");
}

}  // namespace

LoadResult load_dataset(const DatasetDescriptor& descriptor) {
  std::ifstream in(descriptor.path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset '" + descriptor.key + "' at " +
                                 descriptor.path.string());
  const std::vector<RawRow> raw = descriptor.format == DatasetFormat::jsonl
                                      ? read_jsonl_rows(descriptor, in)
                                      : read_delimited_rows(descriptor, in);
  LoadResult result;
  std::unordered_set<std::string> seen_ids;
  for (const RawRow& row : raw) {
    bool discard = false;
    const auto label = map_label(descriptor, row, discard);
    if (discard || (descriptor.hate_only && !is_hate(*label))) {
      ++result.dropped;
      continue;
    }
    std::string text;
    try {
      text = unicode::ingest(row.text);
    } catch (const ValidationError& e) {
      throw ParseError(descriptor.path.string(), row.line, e.what());
    }
    if (text.empty()) throw ParseError(descriptor.path.string(), row.line, "empty text");
    if (!seen_ids.insert(row.id).second) {
      throw ParseError(descriptor.path.string(), row.line, "duplicate id '" + row.id + "'");
    }
    LabeledText t;
    t.id = row.id;
    t.raw_text = std::move(text);
    t.label = *label;
    t.source = descriptor.key;
    result.rows.push_back(std::move(t));
  }
  spdlog::info("loaded dataset '{}': {} rows kept, {} dropped", descriptor.key,
               result.rows.size(), result.dropped);
  return result;
}

namespace {

DatasetFormat parse_format(const std::string& s, const std::filesystem::path& file) {
  if (s == "jsonl") return DatasetFormat::jsonl;
  if (s == "csv") return DatasetFormat::csv;
  if (s == "tsv") return DatasetFormat::tsv;
  throw ValidationError(file.string() + ": unknown dataset format '" + s + "'");
}

}  // namespace

std::vector<DatasetDescriptor> load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open registry " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!doc.contains("datasets") || !doc["datasets"].is_array()) {
    throw ValidationError(path.string() + ": expected a 'datasets' array");
  }
  const auto base_dir = path.parent_path();
  std::vector<DatasetDescriptor> out;
  std::set<std::string> keys;
  for (const auto& entry : doc["datasets"]) {
    try {
      DatasetDescriptor d;
      d.key = entry.at("key").get<std::string>();
      std::filesystem::path p = entry.at("path").get<std::string>();
      d.path = p.is_absolute() ? p : base_dir / p;
      d.format = parse_format(entry.value("format", std::string("jsonl")), path);
      d.hate_only = entry.value("hate_only", false);
      if (entry.contains("label_map")) {
        for (const auto& [external, target] : entry["label_map"].items()) {
          if (target.is_null() || target == "discard") {
            d.label_map[external] = std::nullopt;
          } else {
            const auto l = parse_label(target.get<std::string>());
            if (!l) {
              throw ValidationError(path.string() + ": dataset '" + d.key +
                                    "' maps to unknown label '" + target.get<std::string>() + "'");
            }
            d.label_map[external] = *l;
          }
        }
      }
      if (entry.contains("columns")) {
        const auto& c = entry["columns"];
        d.id_column = c.value("id", d.id_column);
        d.text_column = c.value("text", d.text_column);
        d.label_column = c.value("label", d.label_column);
      }
      if (!keys.insert(d.key).second) {
        throw ValidationError(path.string() + ": duplicate dataset key '" + d.key + "'");
      }
      out.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": malformed dataset entry: " + e.what());
    }
  }
  return out;
}

const DatasetDescriptor& find_descriptor(const std::vector<DatasetDescriptor>& registry,
                                         std::string_view key) {
  for (const auto& d : registry) {
    if (d.key == key) return d;
  }
  throw ValidationError("dataset '" + std::string(key) + "' is not in the registry");
}

Corpus read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      LabeledText t;
      t.id = obj.at("id").get<std::string>();
      t.raw_text = unicode::ingest(obj.at("text").get<std::string>());
      const auto label_text = obj.at("label").get<std::string>();
      const auto label = parse_label(label_text);
      if (!label) throw ValidationError("unknown label '" + label_text + "'");
      t.label = *label;
      t.source = obj.value("source", std::string());
      if (obj.contains("origin")) {
        const auto origin = parse_origin(obj["origin"].get<std::string>());
        if (!origin) throw ValidationError("unknown origin");
        t.origin = *origin;
      }
      if (obj.contains("norm_text")) {
        t.norm_text = obj["norm_text"].get<std::string>();
        t.normalized = true;
      }
      if (t.raw_text.empty()) throw ValidationError("empty text");
      if (!ids.insert(t.id).second) throw ValidationError("duplicate id '" + t.id + "'");
      corpus.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return corpus;
}

void write_corpus_jsonl(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& t : corpus) {
    json obj = json::object();
    obj["id"] = t.id;
    obj["text"] = t.raw_text;
    obj["label"] = std::string(to_string(t.label));
    obj["source"] = t.source;
    if (t.origin != Origin::gold) obj["origin"] = std::string(to_string(t.origin));
    if (t.normalized) obj["norm_text"] = t.norm_text;
    out << obj.dump() << '\n';
  }
}

std::size_t CorpusStats::size() const noexcept {
  std::size_t n = 0;
  for (auto c : per_class_count) n += c;
  return n;
}

double CorpusStats::class_avg_words(Label label) const noexcept {
  const auto n = per_class_count[index_of(label)];
  return n == 0 ? 0.0 : static_cast<double>(per_class_words[index_of(label)]) / n;
}

CorpusStats compute_stats(const Corpus& corpus) {
  if (corpus.empty()) throw ValidationError("cannot compute statistics of an empty corpus");
  CorpusStats stats;
  std::unordered_set<std::string> vocabulary;
  ClassVector<std::unordered_set<std::string>> class_vocabulary;
  for (const auto& t : corpus) {
    const auto c = index_of(t.label);
    ++stats.per_class_count[c];
    for (auto& token : unicode::split_whitespace(t.raw_text)) {
      ++stats.word_count;
      ++stats.per_class_words[c];
      class_vocabulary[c].insert(token);
      vocabulary.insert(std::move(token));
    }
  }
  if (stats.word_count == 0) throw ValidationError("corpus contains no words");
  stats.unique_words = vocabulary.size();
  for (std::size_t c = 0; c < kNumLabels; ++c) stats.per_class_unique[c] = class_vocabulary[c].size();
  stats.avg_words_per_text = static_cast<double>(stats.word_count) / corpus.size();
  return stats;
}

Corpus merge(const std::vector<Corpus>& corpora, bool dedup) {
  Corpus out;
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> texts;
  for (const auto& corpus : corpora) {
    for (const auto& row : corpus) {
      if (dedup && !row.norm_text.empty() && !texts.insert(row.norm_text).second) continue;
      LabeledText t = row;
      const std::string prefix = t.source + ":";
      if (!t.source.empty() && t.id.rfind(prefix, 0) != 0) t.id = prefix + t.id;
      if (!ids.insert(t.id).second) {
        throw ValidationError("id collision while merging corpora: '" + t.id + "'");
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace arhate
