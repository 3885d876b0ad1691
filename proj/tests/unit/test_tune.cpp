#include <doctest.h>

#include <cmath>
#include <map>

#include "arhate/error.hpp"
#include "arhate/tune.hpp"
#include "oracles.hpp"

using namespace arhate;

namespace {

// Smooth surface with a unique optimum at (4, 16, 2e-5).
double surface(const HyperParams& hp) {
  return 90.0 - std::abs(hp.epochs - 4) - std::abs(std::log2(hp.batch_size) - 4) -
         std::abs(hp.learning_rate - 2e-5) * 1e5;
}

}  // namespace

TEST_CASE("default grid matches the published search space") {
  const SearchGrid g;
  CHECK(g.epochs_axis == std::vector<int>{2, 3, 4, 5, 10});
  CHECK(g.batch_axis == std::vector<int>{8, 16, 32, 64});
  CHECK(g.lr_axis.size() == 5);
  CHECK(g.initial == HyperParams{2, 8, 1e-5, 0});
  CHECK_NOTHROW(g.validate());
}

TEST_CASE("coordinate search walks the stages in order") {
  const SearchGrid g;
  std::vector<HyperParams> scored;
  const auto r = coordinate_search(g, [&](const HyperParams& hp) {
    scored.push_back(hp);
    return surface(hp);
  });
  CHECK(r.trace.size() == g.epochs_axis.size() + g.batch_axis.size() + g.lr_axis.size());
  CHECK(r.best.epochs == 4);
  CHECK(r.best.batch_size == 16);
  CHECK(r.best.learning_rate == 2e-5);
  double trace_max = -1e300;
  for (const auto& t : r.trace) trace_max = std::max(trace_max, *t.score);
  CHECK(r.best_score == trace_max);
  // Epoch stage runs at the initial batch size and learning rate.
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r.trace[i].stage == SearchStage::epochs);
    CHECK(r.trace[i].hp.batch_size == 8);
    CHECK(r.trace[i].hp.learning_rate == 1e-5);
  }
  // Batch stage uses the best epochs; lr stage the best epochs and batch.
  for (std::size_t i = 5; i < 9; ++i) CHECK(r.trace[i].hp.epochs == 4);
  for (std::size_t i = 9; i < 14; ++i) CHECK(r.trace[i].hp.batch_size == 16);
  // The incumbent is met again in later stages but never rescored.
  CHECK(scored.size() == r.trace.size() - 2);
  std::size_t cached = 0;
  for (const auto& t : r.trace) cached += t.cached;
  CHECK(cached == 2);
}

TEST_CASE("ties go to the smaller axis value") {
  const SearchGrid g;
  const auto r = coordinate_search(g, [](const HyperParams&) { return 50.0; });
  CHECK(r.best == g.initial);
}

TEST_CASE("failed points are recorded and skipped") {
  const SearchGrid g;
  const auto r = coordinate_search(g, [](const HyperParams& hp) -> double {
    if (hp.epochs == 4) throw std::runtime_error("out of memory");
    return surface(hp);
  });
  CHECK(r.best.epochs != 4);
  bool saw_failure = false;
  for (const auto& t : r.trace) {
    if (!t.score) {
      saw_failure = true;
      CHECK(t.error == "out of memory");
    }
  }
  CHECK(saw_failure);
  CHECK_THROWS_AS(coordinate_search(g, [](const HyperParams&) -> double { throw std::runtime_error("x"); }),
                  StageError);
}

TEST_CASE("grid validation and loading") {
  SearchGrid g;
  g.initial.epochs = 7;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = SearchGrid{};
  g.batch_axis.clear();
  CHECK_THROWS_AS(g.validate(), ValidationError);

  testing::TempDir dir("grid");
  testing::write_file(dir / "g.json",
                      R"({"epochs": [1, 2], "batch_size": [4], "learning_rate": [0.1, 0.5],
                          "initial": {"epochs": 1, "batch_size": 4, "learning_rate": 0.1}, "seed": 9})");
  const auto loaded = load_grid(dir / "g.json");
  CHECK(loaded.epochs_axis == std::vector<int>{1, 2});
  CHECK(loaded.initial == HyperParams{1, 4, 0.1, 9});
  testing::write_file(dir / "bad.json", R"({"epochs": [1], "initial": {"epochs": 2}})");
  CHECK_THROWS_AS(load_grid(dir / "bad.json"), ValidationError);
}

TEST_CASE("trace and stage tables are written as CSV") {
  testing::TempDir dir("trace");
  SearchGrid g;
  g.epochs_axis = {2, 3};
  g.batch_axis = {8};
  g.lr_axis = {1e-5, 2e-5};
  const auto r = coordinate_search(g, [](const HyperParams& hp) {
    if (hp.learning_rate > 1.5e-5) throw std::runtime_error("diverged, lr too high");
    return static_cast<double>(hp.epochs);
  });
  write_trace_csv(dir / "t.csv", r.trace);
  CHECK(testing::read_file(dir / "t.csv") ==
        "stage,epochs,batch_size,learning_rate,micro_f1,status\n"
        "epochs,2,8,1e-05,2,ok\n"
        "epochs,3,8,1e-05,3,ok\n"
        "batch,3,8,1e-05,3,cached\n"
        "lr,3,8,1e-05,3,cached\n"
        "lr,3,8,2e-05,,\"failed: diverged, lr too high\"\n");
  write_stage_tables_csv(dir / "s.csv", "toy", g, r.trace);
  CHECK(testing::read_file(dir / "s.csv") ==
        "Epochs,2,3\ntoy,2,3\n\nBatch size,8\ntoy,3\n\nLearning rate,1e-05,2e-05\ntoy,3,failed\n\n");
}
