#include "arhate/synthetic.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <random>

#include "arhate/error.hpp"

namespace arhate::synthetic {

namespace {

// Five disjoint groups of letters that survive normalization unchanged.
const std::array<std::array<const char*, 5>, kNumLabels> kLetters{{
    {"ب", "ت", "ث", "ج", "ح"},  // NH
    {"خ", "د", "ذ", "ر", "ز"},  // GH
    {"س", "ش", "ص", "ض", "ط"},  // Re
    {"ظ", "ع", "غ", "ف", "ق"},  // Ra
    {"ك", "ل", "م", "ن", "ه"},  // Se
}};

template <typename Rng>
std::size_t pick(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

template <typename Rng>
std::string word(Rng& rng, std::size_t cls) {
  const std::size_t len = 3 + pick(rng, 4);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) {
    w += kLetters[cls][pick(rng, 5)];
    if (i == 1 && pick(rng, 8) == 0) w += "ـــ";   // tatweel
    if (i == 2 && pick(rng, 8) == 0) w += "َ";  // fatha
  }
  return w;
}

template <typename Rng>
std::string text(Rng& rng, std::size_t cls) {
  std::string t;
  if (pick(rng, 4) == 0) t += "@user" + std::to_string(pick(rng, 100)) + " ";
  if (pick(rng, 10) == 0) t += "RT ";
  const std::size_t words = 4 + pick(rng, 7);
  for (std::size_t i = 0; i < words; ++i) {
    if (i) t += ' ';
    t += word(rng, cls);
    if (pick(rng, 12) == 0) t += "!!";
  }
  if (pick(rng, 5) == 0) t += " https://t.co/x" + std::to_string(pick(rng, 1000));
  if (pick(rng, 6) == 0) t += " " + std::to_string(pick(rng, 10000));
  if (pick(rng, 8) == 0) t += " أإآ";
  return t;
}

void write_lines(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

void write_source_jsonl(const std::filesystem::path& path, const Corpus& rows,
                        const std::function<std::string(const LabeledText&)>& label) {
  std::string content;
  for (const auto& r : rows) {
    content += nlohmann::json{{"id", r.id}, {"text", r.raw_text}, {"label", label(r)}}.dump() + "\n";
  }
  write_lines(path, content);
}

}  // namespace

Spec desk_spec(std::uint64_t seed) {
  Spec s;
  s.counts = {300, 80, 45, 35, 40};
  s.seed = seed;
  return s;
}

Corpus generate(const Spec& spec) {
  std::mt19937_64 rng(spec.seed);
  Corpus out;
  std::size_t n = 0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    for (std::size_t i = 0; i < spec.counts[c]; ++i) {
      LabeledText t;
      t.id = spec.id_prefix + std::to_string(n++);
      t.raw_text = text(rng, c);
      t.label = label_at(c);
      t.source = spec.source;
      out.push_back(std::move(t));
    }
  }
  // Interleave classes so file order carries no label signal.
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::filesystem::path write_workspace(const std::filesystem::path& dir, const Spec& base,
                                      bool with_augmentation) {
  std::filesystem::create_directories(dir);
  write_source_jsonl(dir / "base.jsonl", generate(base),
                     [](const LabeledText& r) { return std::string(to_string(r.label)); });

  Spec religious{{0, 0, 30, 0, 0}, base.seed + 101, "rel", "religious"};
  write_source_jsonl(dir / "religious.jsonl", generate(religious),
                     [](const LabeledText&) { return std::string("religious"); });

  // A hate-only source with coarse labels; the NH-looking rows stand in for
  // texts the labeler should reject.
  Spec pseudo{{10, 20, 10, 20, 20}, base.seed + 202, "ps", "offensive"};
  write_source_jsonl(dir / "offensive.jsonl", generate(pseudo),
                     [](const LabeledText&) { return std::string("hate"); });

  nlohmann::json registry = {
      {"datasets",
       {{{"key", "base"}, {"path", "base.jsonl"}, {"format", "jsonl"}},
        {{"key", "religious"},
         {"path", "religious.jsonl"},
         {"format", "jsonl"},
         {"hate_only", true},
         {"label_map", {{"religious", "Re"}}}},
        {{"key", "offensive"},
         {"path", "offensive.jsonl"},
         {"format", "jsonl"},
         {"hate_only", true},
         {"label_map", {{"hate", "GH"}}}}}}};
  write_lines(dir / "registry.json", registry.dump(2) + "\n");
  write_lines(dir / "stopwords.txt", "في\nمن\nعلى\nالى\nعن\n");

  nlohmann::json member = {{"backend", "toy"}, {"epochs", 10}, {"batch_size", 8}, {"learning_rate", 0.5}};
  nlohmann::json member2 = member;
  member2["epochs"] = 8;
  nlohmann::json member3 = member;
  member3["batch_size"] = 16;
  nlohmann::json config = {
      {"seed", base.seed},
      {"paths", {{"registry", "registry.json"}, {"stopwords", "stopwords.txt"}}},
      {"corpus", {{"base", "base"}}},
      {"encoder", {{"members", {member, member2, member3}}}},
      {"ensemble", {{"mode", "majority"}}},
      {"augment",
       {{"enabled", with_augmentation},
        {"direct_sources", {"religious"}},
        {"pseudo_sources", {"offensive"}},
        {"confidence_threshold", 0.5}}},
      {"evaluate", {{"folds", 10}, {"jobs", 1}}}};
  write_lines(dir / "config.json", config.dump(2) + "\n");
  return dir / "config.json";
}

}  // namespace arhate::synthetic
