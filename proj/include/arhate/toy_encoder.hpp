#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "arhate/encoder.hpp"

namespace arhate::toy {

inline constexpr std::size_t kDefaultBuckets = std::size_t{1} << 16;
inline constexpr std::size_t kMinGram = 3;
inline constexpr std::size_t kMaxGram = 5;

/// Linear softmax over hashed features. weights is bucket-major:
/// weights[bucket * kNumLabels + class].
struct Params {
  std::size_t buckets = kDefaultBuckets;
  std::vector<double> weights;
  ClassVector<double> bias{};

  static Params zeros(std::size_t buckets = kDefaultBuckets);
  double& weight(std::size_t bucket, std::size_t cls) { return weights[bucket * kNumLabels + cls]; }
  double weight(std::size_t bucket, std::size_t cls) const {
    return weights[bucket * kNumLabels + cls];
  }
};

/// Sorted, de-duplicated bucket indices with L2-normalized counts.
struct SparseFeatures {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

/// Character 3- to 5-grams of the first max_tokens whitespace tokens, the
/// text padded with one space on each side, hashed with FNV-1a.
SparseFeatures featurize(std::string_view text, std::size_t buckets, std::size_t max_tokens);

struct Example {
  SparseFeatures x;
  Label y;
};

/// Gradient restricted to the weight rows the batch touches.
struct Gradient {
  std::vector<std::uint32_t> rows;
  std::vector<ClassVector<double>> weight;
  ClassVector<double> bias{};
};

struct LossAndGradient {
  double loss = 0.0;
  Gradient gradient;
};

/// Mean softmax cross-entropy over the batch and its exact gradient. Throws
/// ValidationError if the bias or any touched weight is non-finite.
LossAndGradient forward_backward(const Params& params, std::span<const Example> batch);

double mean_loss(const Params& params, std::span<const Example> examples);

ProbRow probabilities(const Params& params, const SparseFeatures& x);

class ToyModel final : public TrainedModel {
 public:
  ToyModel(ModelInfo info, Params params, std::vector<double> epoch_losses);

  std::vector<ProbRow> predict(std::span<const std::string> texts) const override;
  void save(const std::filesystem::path& dir) const override;

  const Params& params() const noexcept { return params_; }
  /// Full training-set loss measured after each epoch.
  const std::vector<double>& epoch_losses() const noexcept { return epoch_losses_; }

 private:
  Params params_;
  std::vector<double> epoch_losses_;
};

/// Mini-batch gradient descent with a seeded per-epoch shuffle.
/// Bit-reproducible for a given seed and row order.
class ToyBackend final : public Backend {
 public:
  explicit ToyBackend(std::size_t buckets = kDefaultBuckets) : buckets_(buckets) {}

  std::string key() const override { return "toy"; }
  std::size_t max_sequence_limit() const override { return 512; }
  std::unique_ptr<TrainedModel> train(const ModelInfo& info,
                                      std::span<const LabeledText> rows) const override;
  std::unique_ptr<TrainedModel> load(const std::filesystem::path& dir,
                                     const ModelManifest& manifest) const override;

 private:
  std::size_t buckets_;
};

}  // namespace arhate::toy
