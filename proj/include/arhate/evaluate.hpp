#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <json.hpp>
#include <string>
#include <vector>

#include "arhate/corpus.hpp"

namespace arhate {

/// Fold index per gold row id. Pseudo-labelled and directly merged rows are
/// never assigned: they only ever train.
struct FoldPlan {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> assignments;

  std::size_t fold_of(const std::string& id) const;
};

/// Within each class (in label order) rows are shuffled with the seed and
/// dealt round-robin; the dealing position carries over between classes so
/// fold sizes stay balanced too. Throws ValidationError if k < 2 or some
/// class has fewer than k gold rows.
FoldPlan stratified_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed);

void write_fold_csv(const std::filesystem::path& path, const FoldPlan& plan);

/// Rows are gold labels, columns predictions.
struct ConfusionMatrix {
  std::array<ClassVector<std::int64_t>, kNumLabels> counts{};

  void add(Label gold, Label predicted) { ++counts[index_of(gold)][index_of(predicted)]; }
  std::int64_t total() const noexcept;
  std::int64_t row_sum(std::size_t c) const noexcept;
  std::int64_t col_sum(std::size_t c) const noexcept;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) noexcept;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

using PerClass = ClassVector<ClassScores>;
using Supports = ClassVector<std::int64_t>;

struct Aggregates {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

/// Fractions in [0, 1]. Undefined precision or recall (zero column or row
/// sum) is 0, and so is F1 when P + R = 0.
PerClass per_class_metrics(const ConfusionMatrix& cm);

Supports supports_of(const ConfusionMatrix& cm);

/// Macro is the plain mean of all five F1s; weighted uses supports as
/// weights. Micro is pooled TP over pooled gold count, recovered as
/// sum(recall * support) / sum(support), which for single-label data equals
/// micro precision, micro recall, and accuracy. Scale-agnostic: percentages
/// in, percentages out.
Aggregates aggregate(const PerClass& per_class, const Supports& supports);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_rows = 0;
  ConfusionMatrix confusion;
  PerClass per_class{};
  Supports supports{};
  Aggregates aggregates{};
};

/// All scores as percentages. per_class holds means over folds and
/// aggregates are computed from those cells with the total supports; the
/// pooled_* fields score the concatenated held-out predictions.
struct MetricsReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  PerClass per_class{};
  Supports supports{};
  Aggregates aggregates{};
  ConfusionMatrix pooled_confusion;
  PerClass pooled_per_class{};
  Aggregates pooled_aggregates{};
  std::vector<FoldResult> folds;
};

using Predictor = std::function<std::vector<Label>(const std::vector<std::string>& texts)>;
/// Trains on the given rows and returns a predictor over normalized texts.
using ModelRecipe = std::function<Predictor(const Corpus& train)>;

struct CrossValidationOptions {
  /// Folds trained concurrently; 1 runs sequentially.
  std::size_t jobs = 1;
};

/// For each fold trains on every other usable row (including non-gold rows)
/// and scores the fold's gold rows. Training failures are rethrown as
/// StageError naming the fold.
MetricsReport cross_validate(const Corpus& corpus, const ModelRecipe& recipe, const FoldPlan& plan,
                             const CrossValidationOptions& options = {});

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& doc);

}  // namespace arhate
