#include <doctest.h>

#include <random>

#include "arhate/error.hpp"
#include "arhate/normalize.hpp"
#include "arhate/unicode.hpp"
#include "oracles.hpp"

using namespace arhate;

namespace {

const std::filesystem::path kData = ARHATE_SOURCE_DIR "/data";
const std::filesystem::path kTestData = ARHATE_SOURCE_DIR "/tests/data";

Normalizer default_normalizer() {
  NormalizationConfig c;
  c.stopword_path = kData / "stopwords_ar.txt";
  return Normalizer(c);
}

// Mix of Arabic letters, hamza forms, diacritics, tatweel, Latin, digits,
// punctuation, emoji, whitespace and tweet markers.
std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces{
      "ا", "أ", "إ", "آ", "ب", "ة", "ى", "ي", "ه", "و", "ل", "م", "ن", "ـ", "َ", "ّ", "ْ", "ٰ",
      "ک", " ", "  ", "\t", "\n", "RT", "R", "T", "@", "#", "_", "http://", "www.", ".", "!", "؟",
      "a", "Z", "1", "٣", "😀", "🏽", "‍", "‏", "ﻻ", "في", "من", "على", "إلى"};
  std::string s;
  const std::size_t n = rng() % 40;
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

bool allowed_output_char(char32_t c) {
  return c == U' ' || (c >= 0x0600 && c <= 0x06FF);
}

}  // namespace

TEST_CASE("golden normalization cases pass byte-exact") {
  const auto n = default_normalizer();
  const auto cases = read_golden_tsv(kTestData / "normalize_golden.tsv");
  REQUIRE(cases.size() >= 20);
  for (const auto& c : cases) {
    INFO("line " << c.line << ": " << c.raw);
    CHECK(n.normalize(unicode::ingest(c.raw)) == c.expected);
  }
}

TEST_CASE("normalization is idempotent on random strings") {
  const auto n = default_normalizer();
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto raw = random_text(rng);
    const auto once = n.normalize(raw);
    const auto twice = n.normalize(once);
    REQUIRE_MESSAGE(once == twice, "input: " << raw);
  }
}

TEST_CASE("normalized output alphabet, spacing and run length") {
  const auto n = default_normalizer();
  std::mt19937_64 rng(99);
  for (int i = 0; i < 3000; ++i) {
    const auto out = n.normalize(random_text(rng));
    const auto cps = unicode::decode(out);
    if (cps.empty()) continue;
    REQUIRE(cps.front() != U' ');
    REQUIRE(cps.back() != U' ');
    std::size_t run = 1;
    for (std::size_t k = 0; k < cps.size(); ++k) {
      REQUIRE(allowed_output_char(cps[k]));
      // No diacritics, tatweel or unified letters survive.
      REQUIRE(cps[k] != 0x0640);
      REQUIRE(!(cps[k] >= 0x064B && cps[k] <= 0x065F));
      REQUIRE(cps[k] != 0x0623);
      REQUIRE(cps[k] != 0x0625);
      REQUIRE(cps[k] != 0x0622);
      REQUIRE(cps[k] != 0x0629);
      REQUIRE(cps[k] != 0x0649);
      if (k > 0) {
        run = cps[k] == cps[k - 1] ? run + 1 : 1;
        REQUIRE(run <= 2);
        REQUIRE(!(cps[k] == U' ' && cps[k - 1] == U' '));
      }
    }
  }
}

TEST_CASE("collapse length and non-Arabic stripping are configurable") {
  NormalizationConfig c;
  c.repeat_collapse_len = 1;
  CHECK(normalize_text("جمييييل", c) == "جميل");
  c.repeat_collapse_len = 3;
  CHECK(normalize_text("جمييييل", c) == "جميييل");
  c.strip_non_arabic = false;
  CHECK(normalize_text("hello مرحبا", c) == "hello مرحبا");
  c.repeat_collapse_len = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("stopwords are matched after normalization and hashed") {
  NormalizationConfig c;
  Normalizer n(c, {"إلى", "عَلَى"});
  CHECK(n.stopword_count() == 2);
  CHECK(n.normalize("ذهب الى البيت على") == "ذهب البيت");
  CHECK(n.stopword_hash().empty());
  const auto file_based = default_normalizer();
  CHECK(file_based.stopword_hash().size() == 64);
  c.stopword_path = kData / "missing.txt";
  CHECK_THROWS_AS(Normalizer{c}, ValidationError);
}

TEST_CASE("normalize_corpus marks rows, keeping empty ones") {
  Corpus corpus(2);
  corpus[0].raw_text = "مرحبا";
  corpus[1].raw_text = "RT @x 123";
  const auto out = normalize_corpus(corpus, Normalizer(NormalizationConfig{}));
  CHECK(out.size() == 2);
  CHECK(out[0].normalized);
  CHECK(out[0].usable());
  CHECK(out[1].empty_after_normalize());
  CHECK_FALSE(out[1].usable());
}

TEST_CASE("golden file parse errors carry the line") {
  testing::TempDir dir("golden");
  testing::write_file(dir / "g.tsv", "# ok\na\tb\nno tab here\n");
  try {
    read_golden_tsv(dir / "g.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}
