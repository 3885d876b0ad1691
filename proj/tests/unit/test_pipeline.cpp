#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>

#include "arhate/error.hpp"
#include "arhate/pipeline.hpp"
#include "arhate/synthetic.hpp"
#include "oracles.hpp"

using namespace arhate;
using nlohmann::json;

namespace {

json small_workspace(const testing::TempDir& dir, bool augment) {
  synthetic::Spec spec{{24, 12, 12, 12, 12}, 5, "s", "synthetic"};
  const auto path = synthetic::write_workspace(dir / "ws", spec, augment);
  auto doc = json::parse(testing::read_file(path));
  doc["evaluate"]["folds"] = 3;
  return doc;
}

ExperimentConfig config_of(const testing::TempDir& dir, const json& doc) {
  return config_from_json(doc, dir / "ws");
}

}  // namespace

TEST_CASE("config rejects unknown keys and backends") {
  testing::TempDir dir("cfg");
  const auto doc = small_workspace(dir, false);
  CHECK_NOTHROW(config_of(dir, doc));

  auto bad = doc;
  bad["evaluate"]["fold"] = 3;
  CHECK_THROWS_AS(config_of(dir, bad), ValidationError);
  bad = doc;
  bad["extra"] = 1;
  CHECK_THROWS_AS(config_of(dir, bad), ValidationError);
  bad = doc;
  bad["encoder"]["members"][0]["backend"] = "no-such-backend";
  CHECK_THROWS_AS(config_of(dir, bad), ValidationError);
  bad = doc;
  bad["encoder"]["members"][0]["seed"] = 4;
  CHECK_THROWS_AS(config_of(dir, bad), ValidationError);
  bad = doc;
  bad["evaluate"]["folds"] = 1;
  CHECK_THROWS_AS(config_of(dir, bad), ValidationError);
}

TEST_CASE("member seeds derive from the run seed") {
  testing::TempDir dir("seed");
  auto doc = small_workspace(dir, false);
  doc["seed"] = 40;
  const auto c = config_of(dir, doc);
  REQUIRE(c.members.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.members[i].hp.seed == 40 + i);
}

TEST_CASE("environment overrides the paths section") {
  testing::TempDir dir("env");
  const auto doc = small_workspace(dir, false);
  ::setenv("ARHATE_PATHS_STOPWORDS", "/elsewhere/stop.txt", 1);
  const auto c = config_of(dir, doc);
  ::unsetenv("ARHATE_PATHS_STOPWORDS");
  CHECK(c.paths.stopwords == std::filesystem::path("/elsewhere/stop.txt"));
  CHECK(config_of(dir, doc).paths.stopwords == dir / "ws" / "stopwords.txt");
}

TEST_CASE("run id depends on seed and inputs, not on paths") {
  testing::TempDir dir("runid");
  auto doc = small_workspace(dir, false);
  const auto id = compute_run_id(config_of(dir, doc));
  CHECK(id.size() == 16);
  CHECK(id.rfind("run-", 0) == 0);
  CHECK(compute_run_id(config_of(dir, doc)) == id);
  auto other = doc;
  other["seed"] = 99;
  CHECK(compute_run_id(config_of(dir, other)) != id);

  std::filesystem::copy(dir / "ws", dir / "ws2", std::filesystem::copy_options::recursive);
  CHECK(compute_run_id(config_from_json(doc, dir / "ws2")) == id);
  std::ofstream(dir / "ws2" / "stopwords.txt", std::ios::app) << "كان\n";
  CHECK(compute_run_id(config_from_json(doc, dir / "ws2")) != id);
}

TEST_CASE("stages resume from markers and rerun downstream of a missing output") {
  testing::TempDir dir("run");
  const auto config = config_of(dir, small_workspace(dir, true));
  const auto first = run_experiment(config, dir / "runs");
  const std::vector<std::string> all{"ingest", "normalize", "train", "augment", "evaluate", "report"};
  CHECK(first.executed == all);
  for (const auto& s : all) CHECK(std::filesystem::exists(first.run_dir / "stages" / (s + ".done")));
  CHECK_FALSE(std::filesystem::exists(first.run_dir / "stages" / "tune.done"));
  const auto manifest = json::parse(testing::read_file(first.run_dir / "manifest.json"));
  CHECK(manifest["stages"]["tune"]["status"] == "skipped");
  CHECK(manifest["run_id"] == first.run_id);
  const auto metrics = testing::read_file(first.run_dir / "metrics.json");

  const auto again = run_experiment(config, dir / "runs");
  CHECK(again.executed.empty());
  CHECK(again.run_id == first.run_id);

  std::filesystem::remove(first.run_dir / "augmented.jsonl");
  const auto third = run_experiment(config, dir / "runs");
  CHECK(third.executed == std::vector<std::string>{"augment", "evaluate", "report"});
  CHECK(testing::read_file(first.run_dir / "metrics.json") == metrics);

  SUBCASE("a failing stage leaves failure.json") {
    testing::write_file(first.run_dir / "ingested.jsonl", "{not json\n");
    std::filesystem::remove(first.run_dir / "stages" / "normalize.done");
    CHECK_THROWS_AS(run_experiment(config, dir / "runs"), std::exception);
    const auto failure = json::parse(testing::read_file(first.run_dir / "failure.json"));
    CHECK(failure["stage"] == "normalize");
    CHECK(failure["kind"] == "validation");
    CHECK_FALSE(failure["error"].get<std::string>().empty());
  }
}
