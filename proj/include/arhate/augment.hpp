#pragma once

#include <filesystem>
#include <memory>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "arhate/corpus.hpp"
#include "arhate/encoder.hpp"
#include "arhate/ensemble.hpp"

namespace arhate {

/// The classifier that assigns pseudo labels: one model, or several
/// combined by voting.
struct LabelerSpec {
  std::vector<ModelMember> members;
  VoteConfig vote;
};

struct AugmentPlan {
  /// Sources whose rows are all religious hate and are merged as Re.
  std::vector<std::string> direct_sources;
  /// Hate-labelled sources relabelled by the labeler.
  std::vector<std::string> pseudo_sources;
  /// Rows whose winning-class confidence is below this are discarded.
  double confidence_threshold = 0.0;
  LabelerSpec labeler;

  /// Direct and pseudo sets disjoint, threshold in [0, 1], members valid.
  void validate() const;
};

/// Plan file: {"registry": path, "direct_sources": [...], "pseudo_sources":
/// [...], "confidence_threshold": x, "labeler": {"members": [...], "mode":
/// "majority"|"average", "weights": [...]}}. Returns the plan and the
/// registry path resolved against the plan's directory.
std::pair<AugmentPlan, std::filesystem::path> load_augment_plan(const std::filesystem::path& path);
ModelMember member_from_json(const nlohmann::json& j);
nlohmann::json member_to_json(const ModelMember& m);

struct SourceTally {
  std::string key;
  bool direct = false;
  std::size_t rows = 0;
  ClassVector<std::size_t> added{};
  std::size_t discarded_nh = 0;
  std::size_t discarded_low_confidence = 0;
  std::size_t discarded_duplicates = 0;
  std::size_t discarded_empty = 0;

  std::size_t added_total() const noexcept;
  /// rows == added + every discard bucket.
  bool reconciles() const noexcept;
};

struct AugmentReport {
  std::size_t added_direct = 0;
  ClassVector<std::size_t> pseudo_counts{};
  std::size_t discarded_nh = 0;
  std::size_t discarded_low_confidence = 0;
  std::size_t discarded_duplicates = 0;
  std::size_t discarded_empty = 0;
  std::vector<SourceTally> sources;

  void absorb(const AugmentReport& other);
  bool reconciles() const noexcept;
};

nlohmann::json to_json(const AugmentReport& report);

/// A loaded source: its descriptor plus normalized rows.
struct SourceRows {
  DatasetDescriptor descriptor;
  Corpus rows;
};

class Labeler {
 public:
  struct Decision {
    Label label = Label::NH;
    double confidence = 0.0;
  };

  /// Untrained; classify() throws.
  Labeler() = default;
  Labeler(std::vector<std::shared_ptr<const TrainedModel>> models, VoteConfig vote);

  /// Fits every member on the usable gold rows of base.
  static Labeler train(const LabelerSpec& spec, const Corpus& base);

  bool trained() const noexcept { return !models_.empty(); }

  /// With one model: argmax and its probability. With several: the vote
  /// winner; confidence is the combined probability (average mode) or the
  /// mean member probability of the winner (majority mode).
  std::vector<Decision> classify(const std::vector<std::string>& ids,
                                 const std::vector<std::string>& texts) const;

  /// One probability matrix per member model.
  std::vector<ProbabilityMatrix> member_probabilities(const std::vector<std::string>& ids,
                                                      const std::vector<std::string>& texts) const;

  const std::vector<std::shared_ptr<const TrainedModel>>& models() const noexcept { return models_; }

 private:
  std::vector<std::shared_ptr<const TrainedModel>> models_;
  VoteConfig vote_;
};

/// Appends source rows as Re with origin direct_merge, skipping rows whose
/// normalized text already occurs in base (or earlier in the sources).
/// Throws ValidationError for a source not declared hate_only.
std::pair<Corpus, AugmentReport> direct_merge(const Corpus& base, std::span<const SourceRows> sources);

/// Classifies source rows and returns the accepted ones as origin pseudo.
/// Order of checks per row: empty text, duplicate of `existing` or an earlier
/// source row, predicted NH, confidence below threshold.
std::pair<Corpus, AugmentReport> pseudo_label(const Labeler& labeler, const Corpus& existing,
                                              std::span<const SourceRows> sources,
                                              const AugmentPlan& plan);

/// Train the labeler on base, direct-merge, pseudo-label the rest, merge.
/// Gold rows come through untouched.
std::pair<Corpus, AugmentReport> build_augmented_corpus(const Corpus& base, const AugmentPlan& plan,
                                                        std::span<const SourceRows> sources);

/// Same, with an already-trained labeler.
std::pair<Corpus, AugmentReport> build_augmented_corpus(const Corpus& base, const AugmentPlan& plan,
                                                        std::span<const SourceRows> sources,
                                                        const Labeler& labeler);

}  // namespace arhate
