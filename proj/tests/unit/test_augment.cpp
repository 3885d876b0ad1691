#include <doctest.h>

#include <random>

#include "arhate/augment.hpp"
#include "arhate/error.hpp"
#include "oracles.hpp"

using namespace arhate;

namespace {

/// Reads the intended class and confidence out of the text itself:
/// "<class index>:<confidence percent>:<anything>".
class ScriptedModel final : public TrainedModel {
 public:
  ScriptedModel() : TrainedModel(ModelInfo{EncoderSpec{"scripted", 512}, HyperParams{}, "f"}) {}
  std::vector<ProbRow> predict(std::span<const std::string> texts) const override {
    std::vector<ProbRow> out;
    for (const auto& t : texts) {
      const int cls = t[0] - '0';
      const double conf = std::stoi(t.substr(2, 2)) / 100.0;
      ProbRow r{};
      for (std::size_t c = 0; c < kNumLabels; ++c) r[c] = (1.0 - conf) / 4;
      r[cls] = conf;
      out.push_back(r);
    }
    return out;
  }
  void save(const std::filesystem::path&) const override {}
};

LabeledText row(const std::string& id, const std::string& text, Label label = Label::GH) {
  LabeledText t;
  t.id = id;
  t.raw_text = t.norm_text = text;
  t.normalized = true;
  t.label = label;
  t.source = "base";
  return t;
}

SourceRows source(const std::string& key, Corpus rows, bool hate_only = true) {
  DatasetDescriptor d;
  d.key = key;
  d.hate_only = hate_only;
  for (auto& r : rows) r.source = key;
  return {d, std::move(rows)};
}

Labeler scripted_labeler(std::size_t models = 1, VoteMode mode = VoteMode::majority) {
  std::vector<std::shared_ptr<const TrainedModel>> ms;
  for (std::size_t i = 0; i < models; ++i) ms.push_back(std::make_shared<ScriptedModel>());
  return Labeler(ms, VoteConfig{mode, {}});
}

AugmentPlan plan_for(std::vector<std::string> direct, std::vector<std::string> pseudo, double threshold) {
  AugmentPlan p;
  p.direct_sources = std::move(direct);
  p.pseudo_sources = std::move(pseudo);
  p.confidence_threshold = threshold;
  p.labeler.members = {ModelMember{}};
  return p;
}

}  // namespace

TEST_CASE("direct merge adds religious rows and skips duplicates") {
  const Corpus base{row("1", "a", Label::NH), row("2", "b", Label::Re)};
  const std::vector<SourceRows> src{source("rel", {row("x", "b"), row("y", "c"), row("z", "c"), row("w", "")})};
  const auto [out, report] = direct_merge(base, src);
  REQUIRE(out.size() == 3);
  CHECK(out[2].id == "rel:y");
  CHECK(out[2].label == Label::Re);
  CHECK(out[2].origin == Origin::direct_merge);
  CHECK(report.added_direct == 1);
  CHECK(report.discarded_duplicates == 2);
  CHECK(report.discarded_empty == 1);
  CHECK(report.reconciles());
  const std::vector<SourceRows> not_hate{source("mixed", {row("a", "q")}, false)};
  CHECK_THROWS_AS(direct_merge(base, not_hate), ValidationError);
}

TEST_CASE("pseudo labelling applies the checks in order") {
  const Corpus base{row("1", "0:90:dup", Label::NH)};
  const std::vector<SourceRows> src{source("ext", {
                                                      row("a", ""),           // empty
                                                      row("b", "0:90:dup"),   // duplicate of base
                                                      row("c", "0:90:nh"),    // predicted NH
                                                      row("d", "1:40:weak"),  // below threshold
                                                      row("e", "1:90:gh"),    // kept as GH
                                                      row("f", "4:60:se"),    // kept as Se
                                                      row("g", "1:90:gh"),    // duplicate in source
                                                  })};
  const auto plan = plan_for({}, {"ext"}, 0.5);
  const auto [added, report] = pseudo_label(scripted_labeler(), base, src, plan);
  REQUIRE(added.size() == 2);
  CHECK(added[0].id == "ext:e");
  CHECK(added[0].label == Label::GH);
  CHECK(added[0].origin == Origin::pseudo);
  CHECK(added[1].label == Label::Se);
  const auto& t = report.sources.at(0);
  CHECK(t.discarded_empty == 1);
  CHECK(t.discarded_duplicates == 2);
  CHECK(t.discarded_nh == 1);
  CHECK(t.discarded_low_confidence == 1);
  CHECK(t.rows == 7);
  CHECK(t.reconciles());
  CHECK(report.pseudo_counts[index_of(Label::GH)] == 1);
  CHECK_THROWS_AS(pseudo_label(Labeler{}, base, src, plan), ValidationError);
}

TEST_CASE("labeler confidence per vote mode") {
  const std::vector<std::string> ids{"a"}, texts{"2:70:x"};
  const auto single = scripted_labeler(1).classify(ids, texts);
  CHECK(single[0].label == Label::Re);
  CHECK(single[0].confidence == doctest::Approx(0.7));
  const auto avg = scripted_labeler(3, VoteMode::average).classify(ids, texts);
  CHECK(avg[0].confidence == doctest::Approx(0.7));
  const auto maj = scripted_labeler(3, VoteMode::majority).classify(ids, texts);
  CHECK(maj[0].label == Label::Re);
  CHECK(maj[0].confidence == doctest::Approx(0.7));
}

TEST_CASE("augmentation invariants hold on random fixtures") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    auto text = [&] {
      if (rng() % 10 == 0) return std::string();
      return std::to_string(rng() % 5) + ":" + std::to_string(10 + rng() % 90) + ":" + std::to_string(rng() % 40);
    };
    Corpus base;
    for (int i = 0; i < 20; ++i) base.push_back(row("g" + std::to_string(i), text(), label_at(rng() % 5)));
    std::vector<SourceRows> sources;
    std::vector<std::string> direct, pseudo;
    const int n_sources = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < n_sources; ++s) {
      Corpus rows;
      const int n = static_cast<int>(rng() % 30);
      for (int i = 0; i < n; ++i) rows.push_back(row(std::to_string(i), text()));
      const std::string key = "src" + std::to_string(s);
      sources.push_back(source(key, rows));
      (rng() % 2 ? direct : pseudo).push_back(key);
    }
    const auto plan = plan_for(direct, pseudo, (rng() % 100) / 100.0);
    const auto [out, report] = build_augmented_corpus(base, plan, sources, scripted_labeler(1 + rng() % 3));

    // Gold rows are untouched and come first, in order.
    REQUIRE(out.size() >= base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(out[i].id == base[i].id);
      CHECK(out[i].raw_text == base[i].raw_text);
      CHECK(out[i].label == base[i].label);
      CHECK(out[i].origin == Origin::gold);
    }
    std::size_t nh_before = 0, nh_after = 0;
    for (const auto& r : base) nh_before += r.label == Label::NH;
    for (const auto& r : out) nh_after += r.label == Label::NH;
    CHECK(nh_after == nh_before);
    for (const auto& r : out) {
      if (r.origin == Origin::pseudo) CHECK(r.label != Label::NH);
      if (r.origin == Origin::direct_merge) CHECK(r.label == Label::Re);
    }
    CHECK(report.reconciles());
    std::size_t rows = 0, accounted = 0;
    for (const auto& t : report.sources) {
      CHECK(t.reconciles());
      rows += t.rows;
      accounted += t.added_total() + t.discarded_nh + t.discarded_low_confidence + t.discarded_duplicates +
                   t.discarded_empty;
    }
    CHECK(rows == accounted);
    CHECK(out.size() == base.size() + report.added_direct +
                            [&] {
                              std::size_t n = 0;
                              for (auto c : report.pseudo_counts) n += c;
                              return n;
                            }());
  }
}

TEST_CASE("augment plan validation and loading") {
  auto p = plan_for({"a"}, {"a"}, 0.5);
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = plan_for({}, {"b"}, 1.5);
  CHECK_THROWS_AS(p.validate(), ValidationError);

  testing::TempDir dir("plan");
  testing::write_file(dir / "plan.json", R"({"registry": "reg.json", "direct_sources": ["rel"],
    "pseudo_sources": ["off"], "confidence_threshold": 0.6,
    "labeler": {"members": [{"backend": "toy", "epochs": 3, "learning_rate": 0.5}], "mode": "average"}})");
  const auto [plan, registry] = load_augment_plan(dir / "plan.json");
  CHECK(registry == dir / "reg.json");
  CHECK(plan.confidence_threshold == 0.6);
  CHECK(plan.labeler.members.at(0).hp.epochs == 3);
  CHECK(plan.labeler.vote.mode == VoteMode::average);
  testing::write_file(dir / "bad.json", R"({"registry": "r", "labeler": {"members": [{"backend": "nope"}]}})");
  CHECK_THROWS_AS(load_augment_plan(dir / "bad.json"), ValidationError);
}
