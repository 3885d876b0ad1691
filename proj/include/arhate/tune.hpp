#pragma once

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "arhate/encoder.hpp"

namespace arhate {

struct SearchGrid {
  std::vector<int> epochs_axis{2, 3, 4, 5, 10};
  std::vector<int> batch_axis{8, 16, 32, 64};
  std::vector<double> lr_axis{1e-5, 2e-5, 3e-5, 4e-5, 5e-5};
  HyperParams initial{2, 8, 1e-5, 0};

  /// Axes non-empty, initial values members of their axes.
  void validate() const;
};

/// Keys: epochs, batch_size, learning_rate (axes), initial {...}, seed.
/// Missing keys keep the defaults.
SearchGrid grid_from_json(const nlohmann::json& doc);
SearchGrid load_grid(const std::filesystem::path& path);

enum class SearchStage { epochs, batch, lr };
std::string_view to_string(SearchStage stage) noexcept;

struct SearchTrace {
  SearchStage stage = SearchStage::epochs;
  HyperParams hp;
  std::optional<double> score;  // micro-F1 percent; empty when the point failed
  bool cached = false;          // score reused from an earlier stage
  std::string error;
};

struct SearchResult {
  HyperParams best;
  double best_score = 0.0;
  std::vector<SearchTrace> trace;
};

/// Scores one configuration (micro-F1 percent). May throw; the point is then
/// recorded as failed.
using ScoreFunction = std::function<double(const HyperParams&)>;

/// Coordinate-wise search: epochs with batch/lr at their initial values,
/// then batch with the best epochs, then lr with the best (epochs, batch).
/// Each stage keeps the highest score, ties to the smaller axis value. A
/// configuration is never scored twice. Throws StageError if every point
/// fails.
SearchResult coordinate_search(const SearchGrid& grid, const ScoreFunction& score);

/// Long format: stage,epochs,batch_size,learning_rate,micro_f1,status.
void write_trace_csv(const std::filesystem::path& path, const std::vector<SearchTrace>& trace);

/// One block per stage, axis values across and the model's scores below.
void write_stage_tables_csv(const std::filesystem::path& path, const std::string& model_name,
                            const SearchGrid& grid, const std::vector<SearchTrace>& trace);

}  // namespace arhate
