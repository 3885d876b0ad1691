#include "arhate/tune.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <json.hpp>
#include <tuple>

#include "arhate/csv.hpp"
#include "arhate/hashing.hpp"

namespace arhate {

void SearchGrid::validate() const {
  if (epochs_axis.empty() || batch_axis.empty() || lr_axis.empty()) {
    throw ValidationError("search grid axes must be non-empty");
  }
  initial.validate();
  for (int e : epochs_axis) HyperParams{e, initial.batch_size, initial.learning_rate, 0}.validate();
  for (int b : batch_axis) HyperParams{initial.epochs, b, initial.learning_rate, 0}.validate();
  for (double lr : lr_axis) HyperParams{initial.epochs, initial.batch_size, lr, 0}.validate();
  auto member = [](const auto& axis, auto value) {
    return std::find(axis.begin(), axis.end(), value) != axis.end();
  };
  if (!member(epochs_axis, initial.epochs) || !member(batch_axis, initial.batch_size) ||
      !member(lr_axis, initial.learning_rate)) {
    throw ValidationError("initial hyperparameters must lie on the search grid");
  }
}

SearchGrid grid_from_json(const nlohmann::json& doc) {
  SearchGrid g;
  if (doc.contains("epochs")) g.epochs_axis = doc["epochs"].get<std::vector<int>>();
  if (doc.contains("batch_size")) g.batch_axis = doc["batch_size"].get<std::vector<int>>();
  if (doc.contains("learning_rate")) g.lr_axis = doc["learning_rate"].get<std::vector<double>>();
  if (doc.contains("initial")) {
    const auto& i = doc["initial"];
    g.initial.epochs = i.value("epochs", g.initial.epochs);
    g.initial.batch_size = i.value("batch_size", g.initial.batch_size);
    g.initial.learning_rate = i.value("learning_rate", g.initial.learning_rate);
  }
  g.initial.seed = doc.value("seed", std::uint64_t{0});
  g.validate();
  return g;
}

SearchGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid file " + path.string());
  try {
    return grid_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string_view to_string(SearchStage stage) noexcept {
  switch (stage) {
    case SearchStage::epochs: return "epochs";
    case SearchStage::batch: return "batch";
    case SearchStage::lr: return "lr";
  }
  return "epochs";
}

namespace {

using Key = std::tuple<int, int, double>;

Key key_of(const HyperParams& hp) { return {hp.epochs, hp.batch_size, hp.learning_rate}; }

template <typename T>
std::vector<T> sorted_unique(std::vector<T> axis) {
  std::sort(axis.begin(), axis.end());
  axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  return axis;
}

}  // namespace

SearchResult coordinate_search(const SearchGrid& grid, const ScoreFunction& score) {
  grid.validate();
  SearchResult result;
  std::map<Key, SearchTrace> cache;
  HyperParams incumbent = grid.initial;
  std::optional<double> incumbent_score;

  auto visit = [&](SearchStage stage, const HyperParams& hp) -> std::optional<double> {
    SearchTrace t;
    if (auto it = cache.find(key_of(hp)); it != cache.end()) {
      t = it->second;
      t.cached = true;
    } else {
      t.hp = hp;
      try {
        t.score = score(hp);
      } catch (const std::exception& e) {
        t.error = e.what();
      }
      cache[key_of(hp)] = t;
    }
    t.stage = stage;
    result.trace.push_back(t);
    return t.score;
  };

  auto run_stage = [&](SearchStage stage, const auto& axis, auto set) {
    std::optional<HyperParams> stage_best;
    std::optional<double> stage_score;
    // Ascending axis order + strict improvement = ties go to the smaller value.
    for (auto value : sorted_unique(axis)) {
      HyperParams hp = incumbent;
      set(hp, value);
      const auto s = visit(stage, hp);
      if (s && (!stage_score || *s > *stage_score)) {
        stage_score = s;
        stage_best = hp;
      }
    }
    if (stage_best) {
      incumbent = *stage_best;
      incumbent_score = stage_score;
    }
  };

  run_stage(SearchStage::epochs, grid.epochs_axis, [](HyperParams& hp, int v) { hp.epochs = v; });
  run_stage(SearchStage::batch, grid.batch_axis, [](HyperParams& hp, int v) { hp.batch_size = v; });
  run_stage(SearchStage::lr, grid.lr_axis, [](HyperParams& hp, double v) { hp.learning_rate = v; });

  if (!incumbent_score) throw StageError("coordinate search: every grid point failed");
  result.best = incumbent;
  result.best_score = *incumbent_score;
  return result;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<SearchTrace>& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "stage,epochs,batch_size,learning_rate,micro_f1,status\n";
  for (const auto& t : trace) {
    out << to_string(t.stage) << ',' << t.hp.epochs << ',' << t.hp.batch_size << ','
        << format_double(t.hp.learning_rate) << ',' << (t.score ? format_double(*t.score) : "")
        << ',' << (t.score ? (t.cached ? "cached" : "ok") : csv::escape("failed: " + t.error))
        << '\n';
  }
}

void write_stage_tables_csv(const std::filesystem::path& path, const std::string& model_name,
                            const SearchGrid& grid, const std::vector<SearchTrace>& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  auto block = [&](SearchStage stage, const std::string& title, const std::vector<std::string>& axis) {
    std::vector<std::string> header{title};
    header.insert(header.end(), axis.begin(), axis.end());
    std::vector<std::string> row{model_name};
    for (const auto& t : trace) {
      if (t.stage == stage) row.push_back(t.score ? format_double(*t.score) : "failed");
    }
    out << csv::join(header) << '\n' << csv::join(row) << "\n\n";
  };
  auto ints = [](std::vector<int> axis) {
    std::vector<std::string> s;
    for (int v : sorted_unique(std::move(axis))) s.push_back(std::to_string(v));
    return s;
  };
  std::vector<std::string> lrs;
  for (double v : sorted_unique(grid.lr_axis)) lrs.push_back(format_double(v));
  block(SearchStage::epochs, "Epochs", ints(grid.epochs_axis));
  block(SearchStage::batch, "Batch size", ints(grid.batch_axis));
  block(SearchStage::lr, "Learning rate", lrs);
}

}  // namespace arhate
