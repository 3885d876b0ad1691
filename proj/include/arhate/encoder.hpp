#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "arhate/corpus.hpp"
#include "arhate/error.hpp"
#include "arhate/probability.hpp"

namespace arhate {

struct HyperParams {
  int epochs = 2;
  int batch_size = 8;
  double learning_rate = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct EncoderSpec {
  std::string backend_key = "toy";
  /// Inputs are truncated to this many whitespace tokens; batches are padded
  /// to their longest row within the cap.
  std::size_t max_sequence_tokens = 512;

  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

/// One classifier of an ensemble: which backend, trained how.
struct ModelMember {
  EncoderSpec spec;
  HyperParams hp;
};

/// Raised when a backend cannot train or load in this environment.
class BackendUnavailable : public StageError {
 public:
  enum class Reason { not_installed, download_failed };

  BackendUnavailable(Reason reason, const std::string& what)
      : StageError(what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

/// Everything that identifies a trained model apart from its weights.
struct ModelInfo {
  EncoderSpec spec;
  HyperParams hp;
  std::string fingerprint;
};

/// Key=value text file stored next to the weights of a model.
struct ModelManifest {
  std::map<std::string, std::string> entries;

  const std::string& at(const std::string& key) const;
  static ModelManifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

class TrainedModel {
 public:
  explicit TrainedModel(ModelInfo info) : info_(std::move(info)) {}
  virtual ~TrainedModel() = default;

  const ModelInfo& info() const noexcept { return info_; }

  /// One probability row per text. Must be a pure function of the weights
  /// and the text, safe to call concurrently.
  virtual std::vector<ProbRow> predict(std::span<const std::string> texts) const = 0;

  /// Writes weights and manifest.txt into dir (created if missing).
  virtual void save(const std::filesystem::path& dir) const = 0;

 protected:
  ModelManifest base_manifest() const;

 private:
  ModelInfo info_;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string key() const = 0;
  virtual std::size_t max_sequence_limit() const = 0;
  /// Throws BackendUnavailable when the backend cannot run here.
  virtual void check_available() const {}
  virtual std::unique_ptr<TrainedModel> train(const ModelInfo& info,
                                              std::span<const LabeledText> rows) const = 0;
  virtual std::unique_ptr<TrainedModel> load(const std::filesystem::path& dir,
                                             const ModelManifest& manifest) const = 0;
};

/// Process-wide backend table. Holds "toy" and the three pretrained-model
/// slots by default; tests and embedders may add their own.
class BackendRegistry {
 public:
  static BackendRegistry& instance();

  void add(std::shared_ptr<const Backend> backend);
  bool contains(const std::string& key) const;
  /// Throws ValidationError for an unknown key.
  std::shared_ptr<const Backend> at(const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  BackendRegistry();
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Backend>> backends_;
};

/// The roster of pretrained Arabic encoders the harness has slots for.
inline constexpr std::array<std::string_view, 3> kPretrainedBackends{
    "bert-base-arabertv02-twitter", "bert-large-arabertv02-twitter", "MARBERT"};

/// Checks a member configuration without training: known backend, valid
/// hyperparameters, sequence cap within the backend limit.
void validate_member(const ModelMember& member);

/// sha256 over the configuration and the ordered training ids.
std::string training_fingerprint(const EncoderSpec& spec, const HyperParams& hp,
                                 std::span<const LabeledText> rows);

/// Trains a five-way classifier. Rows must be normalized and non-empty and
/// cover at least two classes.
std::unique_ptr<TrainedModel> fit(const EncoderSpec& spec, const HyperParams& hp,
                                  std::span<const LabeledText> rows);

ProbabilityMatrix predict_proba(const TrainedModel& model, std::vector<std::string> ids,
                                std::span<const std::string> texts);

std::unique_ptr<TrainedModel> load_model(const std::filesystem::path& dir);

}  // namespace arhate
