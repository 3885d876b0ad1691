#include <doctest.h>

#include <fstream>

#include "arhate/error.hpp"
#include "arhate/report.hpp"
#include "oracles.hpp"

using namespace arhate;

namespace {

std::filesystem::path baselines_path() { return std::filesystem::path(ARHATE_SOURCE_DIR) / "data/baselines.json"; }

const BaselineRow& find(const BaselineTable& t, int table, const std::string& system) {
  for (const auto& r : t.rows) {
    if (r.table == table && r.system == system) return r;
  }
  throw std::runtime_error("row not found: " + system);
}

void write_run(const std::filesystem::path& dir) {
  ConfusionMatrix cm;
  for (std::size_t g = 0; g < kNumLabels; ++g) {
    for (std::size_t p = 0; p < kNumLabels; ++p) cm.counts[g][p] = g == p ? 20 + static_cast<int>(g) : 1;
  }
  MetricsReport m;
  m.k = 1;
  m.pooled_confusion = cm;
  m.pooled_per_class = per_class_metrics(cm);
  m.supports = supports_of(cm);
  m.per_class = m.pooled_per_class;
  for (auto& c : m.per_class) c.f1 *= 100, c.precision *= 100, c.recall *= 100;
  m.aggregates = aggregate(m.per_class, m.supports);
  m.pooled_aggregates = aggregate(m.pooled_per_class, m.supports);
  testing::write_file(dir / "metrics.json", to_json(m).dump(1));
}

}  // namespace

TEST_CASE("published majority-vote row recomputes to its macro") {
  const auto t = load_baselines(baselines_path());
  const auto& row = find(t, 7, "Majority voting");
  const auto check = check_consistency(row.f1, t.supports, row.macro, row.weighted);
  CHECK(std::abs(check.recomputed_macro - 72.66) <= 0.02);
  CHECK_FALSE(check.flagged);
}

TEST_CASE("a perturbed aggregate is flagged") {
  const auto t = load_baselines(baselines_path());
  const auto& row = find(t, 7, "Majority voting");
  CHECK(check_consistency(row.f1, t.supports, row.macro + 0.5, row.weighted).flagged);
  CHECK(check_consistency(row.f1, t.supports, row.macro, row.weighted - 0.5).flagged);
}

TEST_CASE("no shipped reference row is flagged") {
  const auto t = load_baselines(baselines_path());
  CHECK(t.rows.size() >= 20);
  for (const auto& r : t.rows) {
    INFO(r.table << " " << r.system);
    CHECK_FALSE(check_consistency(r.f1, t.supports, r.macro, r.weighted).flagged);
  }
}

TEST_CASE("rendering baselines only, with runs, and missing metrics") {
  const auto t = load_baselines(baselines_path());
  const auto md = render({}, t, ReportFormat::markdown);
  CHECK(md.find("Majority voting") != std::string::npos);
  CHECK(md.find("72.66") != std::string::npos);
  CHECK(md.find("FLAG") == std::string::npos);
  // 0-1 scale rows are displayed as percentages.
  CHECK(md.find("| 0.27") == std::string::npos);

  testing::TempDir dir("report");
  write_run(dir / "run-a");
  const std::vector<std::filesystem::path> runs{dir / "run-a"};
  const auto first = render(runs, t, ReportFormat::markdown);
  CHECK(first == render(runs, t, ReportFormat::markdown));
  CHECK(first.find("fold-mean") != std::string::npos);
  CHECK(first.find("pooled") != std::string::npos);
  const auto csv = render(runs, t, ReportFormat::csv);
  CHECK(csv.rfind("table,system,kind,", 0) == 0);
  CHECK(csv.find("run-a,fold-mean") != std::string::npos);

  const std::vector<std::filesystem::path> bad{dir / "run-a", dir / "run-missing"};
  try {
    render(bad, t, ReportFormat::markdown);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("run-missing") != std::string::npos);
  }
}

TEST_CASE("baselines loading rejects malformed files") {
  testing::TempDir dir("baselines");
  testing::write_file(dir / "b.json", R"({"supports": {"NH": 1}, "rows": []})");
  CHECK_THROWS_AS(load_baselines(dir / "b.json"), ValidationError);
  CHECK_THROWS_AS(load_baselines(dir / "absent.json"), ValidationError);
  CHECK_THROWS_AS(parse_report_format("html"), ValidationError);
}
