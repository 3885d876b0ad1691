#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "oracles.hpp"

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ARHATE_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("cli exit codes") {
  testing::TempDir dir("cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("no-such-command") == 1);
  CHECK(run_cli("normalize --in " + q(dir / "absent.jsonl") + " --out x") == 1);

  REQUIRE(run_cli("synth --out " + q(dir / "ws")) == 0);
  testing::write_file(dir / "rows.jsonl",
                      "{\"id\":\"1\",\"text\":\"السلام عليكم\",\"label\":\"NH\",\"source\":\"t\"}\n");
  CHECK(run_cli("normalize --in " + q(dir / "rows.jsonl") + " --out " + q(dir / "norm.jsonl")) == 0);
  CHECK(testing::read_file(dir / "norm.jsonl").find("\"norm_text\"") != std::string::npos);

  testing::write_file(dir / "broken.jsonl", "{\"id\":\"1\",\"text\":\"x\",\"label\":\"NH\"}\n{oops\n");
  CHECK(run_cli("normalize --in " + q(dir / "broken.jsonl") + " --out " + q(dir / "n2.jsonl")) == 1);

  auto cfg = nlohmann::json::parse(testing::read_file(dir / "ws/config.json"));
  cfg["surprise"] = true;
  testing::write_file(dir / "ws/bad.json", cfg.dump());
  CHECK(run_cli("run --config " + q(dir / "ws/bad.json") + " --out " + q(dir / "runs")) == 1);

  std::filesystem::create_directories(dir / "empty-run");
  CHECK(run_cli("report --runs " + q(dir / "empty-run") + " --out " + q(dir / "r.md")) == 1);

  // A training failure inside a fold is a stage failure.
  testing::write_file(dir / "hp.json", "{\"epochs\": 1, \"batch_size\": 4, \"learning_rate\": 0.1}");
  CHECK(run_cli("evaluate --data " + q(dir / "rows.jsonl") + " --backend toy --hp " + q(dir / "hp.json") +
                " --folds 2 --out " + q(dir / "eval")) != 0);
}
