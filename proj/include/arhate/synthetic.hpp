#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "arhate/corpus.hpp"

namespace arhate::synthetic {

/// Rows per class plus the generator seed. Each class draws its words from
/// its own disjoint group of Arabic letters, so the classes are separable by
/// character n-grams. Raw texts carry noise the normalizer has to strip
/// (mentions, URLs, digits, tatweel, harakat, hamza forms).
struct Spec {
  ClassVector<std::size_t> counts{};
  std::uint64_t seed = 1;
  std::string id_prefix = "s";
  std::string source = "synthetic";
};

/// About 500 rows with the class imbalance of a tweet corpus.
Spec desk_spec(std::uint64_t seed = 1);

Corpus generate(const Spec& spec);

/// Writes base.jsonl, a Re-only source, a hate-only pseudo-label source,
/// registry.json, stopwords.txt and config.json (toy ensemble, augmentation
/// as requested) into dir. Returns the config path.
std::filesystem::path write_workspace(const std::filesystem::path& dir, const Spec& base,
                                      bool with_augmentation);

}  // namespace arhate::synthetic
