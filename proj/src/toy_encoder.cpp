#include "arhate/toy_encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "arhate/hashing.hpp"
#include "arhate/unicode.hpp"

namespace arhate::toy {

static_assert(std::endian::native == std::endian::little, "weights blob is little-endian");

Params Params::zeros(std::size_t buckets) {
  if (buckets == 0) throw ValidationError("toy encoder needs at least one bucket");
  Params p;
  p.buckets = buckets;
  p.weights.assign(buckets * kNumLabels, 0.0);
  return p;
}

SparseFeatures featurize(std::string_view text, std::size_t buckets, std::size_t max_tokens) {
  auto tokens = unicode::split_whitespace(text);
  if (tokens.size() > max_tokens) tokens.resize(max_tokens);
  std::string joined = " ";
  for (const auto& t : tokens) joined += t + " ";
  const std::u32string cps = unicode::decode(joined);

  std::vector<std::uint32_t> hits;
  for (std::size_t n = kMinGram; n <= kMaxGram; ++n) {
    for (std::size_t i = 0; i + n <= cps.size(); ++i) {
      const std::string gram = unicode::encode(std::u32string_view(cps).substr(i, n));
      hits.push_back(static_cast<std::uint32_t>(fnv1a64(gram) % buckets));
    }
  }
  std::sort(hits.begin(), hits.end());

  SparseFeatures f;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    f.index.push_back(hits[i]);
    f.value.push_back(static_cast<double>(j - i));
    i = j;
  }
  const double norm = std::sqrt(std::inner_product(f.value.begin(), f.value.end(), f.value.begin(), 0.0));
  if (norm > 0.0) {
    for (double& v : f.value) v /= norm;
  }
  return f;
}

namespace {

ClassVector<double> logits(const Params& params, const SparseFeatures& x) {
  ClassVector<double> z = params.bias;
  for (std::size_t k = 0; k < x.index.size(); ++k) {
    for (std::size_t c = 0; c < kNumLabels; ++c) z[c] += x.value[k] * params.weight(x.index[k], c);
  }
  return z;
}

// Returns log-sum-exp and fills the softmax.
double softmax(const ClassVector<double>& z, ProbRow& p) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    p[c] = std::exp(z[c] - zmax);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return zmax + std::log(sum);
}

void require_finite(const Params& params, std::span<const Example> batch) {
  for (double b : params.bias) {
    if (!std::isfinite(b)) throw ValidationError("toy encoder: non-finite bias");
  }
  for (const auto& ex : batch) {
    for (auto idx : ex.x.index) {
      if (idx >= params.buckets) throw ValidationError("toy encoder: feature index out of range");
      for (std::size_t c = 0; c < kNumLabels; ++c) {
        if (!std::isfinite(params.weight(idx, c))) {
          throw ValidationError("toy encoder: non-finite weight in bucket " + std::to_string(idx));
        }
      }
    }
  }
}

}  // namespace

ProbRow probabilities(const Params& params, const SparseFeatures& x) {
  ProbRow p{};
  softmax(logits(params, x), p);
  return p;
}

LossAndGradient forward_backward(const Params& params, std::span<const Example> batch) {
  require_finite(params, batch);
  LossAndGradient out;
  if (batch.empty()) return out;

  std::vector<std::uint32_t> rows;
  for (const auto& ex : batch) rows.insert(rows.end(), ex.x.index.begin(), ex.x.index.end());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  out.gradient.rows = rows;
  out.gradient.weight.assign(rows.size(), ClassVector<double>{});

  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    const auto z = logits(params, ex.x);
    ProbRow p{};
    const double lse = softmax(z, p);
    const auto y = index_of(ex.y);
    out.loss += (lse - z[y]) * scale;

    ClassVector<double> dz{};
    for (std::size_t c = 0; c < kNumLabels; ++c) dz[c] = (p[c] - (c == y ? 1.0 : 0.0)) * scale;
    for (std::size_t c = 0; c < kNumLabels; ++c) out.gradient.bias[c] += dz[c];
    for (std::size_t k = 0; k < ex.x.index.size(); ++k) {
      const auto pos = static_cast<std::size_t>(
          std::lower_bound(rows.begin(), rows.end(), ex.x.index[k]) - rows.begin());
      for (std::size_t c = 0; c < kNumLabels; ++c) {
        out.gradient.weight[pos][c] += ex.x.value[k] * dz[c];
      }
    }
  }
  return out;
}

double mean_loss(const Params& params, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    const auto z = logits(params, ex.x);
    ProbRow p{};
    total += softmax(z, p) - z[index_of(ex.y)];
  }
  return total / static_cast<double>(examples.size());
}

ToyModel::ToyModel(ModelInfo info, Params params, std::vector<double> epoch_losses)
    : TrainedModel(std::move(info)),
      params_(std::move(params)),
      epoch_losses_(std::move(epoch_losses)) {}

std::vector<ProbRow> ToyModel::predict(std::span<const std::string> texts) const {
  std::vector<ProbRow> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    out.push_back(probabilities(params_, featurize(text, params_.buckets, info().spec.max_sequence_tokens)));
  }
  return out;
}

void ToyModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "weights.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write weights to " + dir.string());
    out.write(reinterpret_cast<const char*>(params_.bias.data()),
              static_cast<std::streamsize>(sizeof(double) * kNumLabels));
    out.write(reinterpret_cast<const char*>(params_.weights.data()),
              static_cast<std::streamsize>(sizeof(double) * params_.weights.size()));
  }
  auto manifest = base_manifest();
  manifest.entries["buckets"] = std::to_string(params_.buckets);
  manifest.entries["weights"] = "weights.bin";
  manifest.entries["weights_sha256"] = sha256_file(dir / "weights.bin");
  std::string losses;
  for (std::size_t i = 0; i < epoch_losses_.size(); ++i) {
    if (i > 0) losses += ",";
    losses += format_double(epoch_losses_[i]);
  }
  manifest.entries["epoch_losses"] = losses;
  manifest.write(dir / "manifest.txt");
}

namespace {

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

std::unique_ptr<TrainedModel> ToyBackend::train(const ModelInfo& info,
                                                std::span<const LabeledText> rows) const {
  std::vector<Example> examples;
  examples.reserve(rows.size());
  for (const auto& row : rows) {
    examples.push_back({featurize(row.norm_text, buckets_, info.spec.max_sequence_tokens), row.label});
  }

  Params params = Params::zeros(buckets_);
  std::mt19937_64 rng(info.hp.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> epoch_losses;
  const auto batch_size = static_cast<std::size_t>(info.hp.batch_size);
  const double lr = info.hp.learning_rate;

  std::vector<Example> batch;
  for (int epoch = 0; epoch < info.hp.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
        batch.push_back(examples[order[i]]);
      }
      const auto step = forward_backward(params, batch);
      for (std::size_t r = 0; r < step.gradient.rows.size(); ++r) {
        for (std::size_t c = 0; c < kNumLabels; ++c) {
          params.weight(step.gradient.rows[r], c) -= lr * step.gradient.weight[r][c];
        }
      }
      for (std::size_t c = 0; c < kNumLabels; ++c) params.bias[c] -= lr * step.gradient.bias[c];
    }
    epoch_losses.push_back(mean_loss(params, examples));
  }
  return std::make_unique<ToyModel>(info, std::move(params), std::move(epoch_losses));
}

std::unique_ptr<TrainedModel> ToyBackend::load(const std::filesystem::path& dir,
                                               const ModelManifest& manifest) const {
  ModelInfo info;
  info.spec.backend_key = manifest.at("backend");
  info.spec.max_sequence_tokens = std::stoul(manifest.at("max_sequence_tokens"));
  info.hp.epochs = std::stoi(manifest.at("epochs"));
  info.hp.batch_size = std::stoi(manifest.at("batch_size"));
  info.hp.learning_rate = std::stod(manifest.at("learning_rate"));
  info.hp.seed = std::stoull(manifest.at("seed"));
  info.fingerprint = manifest.at("fingerprint");

  Params params = Params::zeros(std::stoul(manifest.at("buckets")));
  std::ifstream in(dir / manifest.at("weights"), std::ios::binary);
  if (!in) throw ValidationError("cannot read weights in " + dir.string());
  in.read(reinterpret_cast<char*>(params.bias.data()),
          static_cast<std::streamsize>(sizeof(double) * kNumLabels));
  in.read(reinterpret_cast<char*>(params.weights.data()),
          static_cast<std::streamsize>(sizeof(double) * params.weights.size()));
  if (!in || in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("weights blob in " + dir.string() + " has the wrong size");
  }
  std::vector<double> losses;
  if (auto it = manifest.entries.find("epoch_losses"); it != manifest.entries.end()) {
    std::size_t pos = 0;
    const auto& s = it->second;
    while (pos < s.size()) {
      auto comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      losses.push_back(std::stod(s.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  }
  return std::make_unique<ToyModel>(std::move(info), std::move(params), std::move(losses));
}

}  // namespace arhate::toy
