#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "arhate/augment.hpp"
#include "arhate/encoder.hpp"
#include "arhate/ensemble.hpp"
#include "arhate/evaluate.hpp"
#include "arhate/normalize.hpp"
#include "arhate/tune.hpp"

namespace arhate {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct ExperimentPaths {
  std::filesystem::path registry;
  std::filesystem::path stopwords;
  std::filesystem::path baselines;
};

/// One declarative file, sections mirroring the modules:
///   seed, paths{registry, stopwords, baselines}, corpus{base, dedup},
///   normalize{repeat_collapse_len, strip_non_arabic}, encoder{members},
///   tune{enabled, folds, grid}, ensemble{mode, weights},
///   augment{enabled, direct_sources, pseudo_sources, confidence_threshold},
///   evaluate{folds, jobs}.
/// Unknown keys are rejected. Relative paths resolve against the config
/// file; ARHATE_PATHS_<KEY> environment variables override the paths section.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  ExperimentPaths paths;
  std::string base_corpus;
  bool dedup = false;
  NormalizationConfig normalize;
  std::vector<ModelMember> members;
  bool tune_enabled = false;
  std::size_t tune_folds = 10;
  SearchGrid grid;
  VoteConfig vote;
  bool augment_enabled = false;
  std::vector<std::string> direct_sources;
  std::vector<std::string> pseudo_sources;
  double confidence_threshold = 0.0;
  std::size_t folds = 10;
  std::size_t jobs = 1;

  /// Resolved configuration, the input of the run id.
  nlohmann::json snapshot() const;
  void validate() const;
  /// Members with their seeds derived from the run seed where unset.
  void apply_seed(std::uint64_t seed);
  /// Augmentation plan whose labeler is the configured ensemble.
  AugmentPlan augment_plan() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Trains every member on the rows and combines their predictions with the
/// vote (a single member predicts its argmax).
ModelRecipe make_recipe(std::vector<ModelMember> members, VoteConfig vote);

/// Predicts with already trained models, combined the same way.
std::vector<Label> ensemble_predict(const std::vector<std::shared_ptr<const TrainedModel>>& models,
                                    const VoteConfig& vote, const std::vector<std::string>& texts);

/// Only usable rows with origin gold; used by tuning and split.
Corpus usable_rows(const Corpus& corpus);

/// Fold-mean micro-F1 of the member under k-fold cross-validation.
double cross_validated_micro_f1(const Corpus& corpus, const ModelMember& member, std::size_t folds,
                                std::uint64_t seed, std::size_t jobs);

inline constexpr std::array<std::string_view, 7> kStages{
    "ingest", "normalize", "tune", "train", "augment", "evaluate", "report"};

struct RunSummary {
  std::string run_id;
  std::filesystem::path run_dir;
  /// Stages that actually executed in this invocation, in order.
  std::vector<std::string> executed;
};

/// Runs the pipeline into out_root/<run id>. Each stage leaves a marker in
/// stages/; a stage whose marker or outputs are missing reruns, and so does
/// everything after it. On failure failure.json records the stage and the
/// error, and the exception propagates.
RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_root);

/// "run-" + 12 hex digits over the config snapshot and input file hashes.
std::string compute_run_id(const ExperimentConfig& config);

}  // namespace arhate
