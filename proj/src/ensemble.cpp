#include "arhate/ensemble.hpp"

#include <cmath>

#include "arhate/error.hpp"

namespace arhate {

namespace {

void check_aligned(std::span<const ProbabilityMatrix> matrices) {
  if (matrices.empty()) throw ValidationError("voting needs at least one probability matrix");
  if (matrices.size() < 2) throw ValidationError("voting needs at least two models");
  const auto& ids = matrices.front().ids;
  for (const auto& m : matrices) {
    if (m.rows.size() != m.ids.size()) throw ValidationError("probability matrix: id/row count mismatch");
    if (m.ids != ids) throw ValidationError("probability matrices are not aligned on ids");
  }
}

}  // namespace

void VoteConfig::validate(std::size_t models) const {
  if (weights.empty()) return;
  if (weights.size() != models) {
    throw ValidationError("expected " + std::to_string(models) + " vote weights, got " +
                          std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("vote weights must be non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw ValidationError("vote weights must not all be zero");
}

std::string_view to_string(VoteMode mode) noexcept {
  return mode == VoteMode::majority ? "majority" : "average";
}

VoteMode parse_vote_mode(std::string_view text) {
  if (text == "majority") return VoteMode::majority;
  if (text == "average") return VoteMode::average;
  throw ValidationError("unknown vote mode '" + std::string(text) + "'");
}

std::vector<Label> majority_vote(std::span<const ProbabilityMatrix> matrices) {
  check_aligned(matrices);
  const std::size_t n = matrices.front().size();
  std::vector<Label> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ClassVector<int> votes{};
    ClassVector<double> mass{};
    for (const auto& m : matrices) {
      ++votes[index_of(argmax(m.rows[i]))];
      for (std::size_t c = 0; c < kNumLabels; ++c) mass[c] += m.rows[i][c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumLabels; ++c) {
      if (votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best])) best = c;
    }
    out.push_back(label_at(best));
  }
  return out;
}

ProbabilityMatrix vote_shares(std::span<const ProbabilityMatrix> matrices) {
  check_aligned(matrices);
  ProbabilityMatrix out;
  out.ids = matrices.front().ids;
  const double share = 1.0 / static_cast<double>(matrices.size());
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    ProbRow row{};
    for (const auto& m : matrices) row[index_of(argmax(m.rows[i]))] += share;
    out.rows.push_back(row);
  }
  return out;
}

AverageVote average_vote(std::span<const ProbabilityMatrix> matrices, std::span<const double> weights) {
  check_aligned(matrices);
  VoteConfig{VoteMode::average, {weights.begin(), weights.end()}}.validate(matrices.size());
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(matrices.size(), 1.0);
  double total = 0.0;
  for (double x : w) total += x;

  AverageVote out;
  out.combined.ids = matrices.front().ids;
  const std::size_t n = matrices.front().size();
  out.combined.rows.reserve(n);
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ProbRow row{};
    for (std::size_t m = 0; m < matrices.size(); ++m) {
      for (std::size_t c = 0; c < kNumLabels; ++c) row[c] += w[m] * matrices[m].rows[i][c];
    }
    for (double& v : row) v /= total;
    out.labels.push_back(argmax(row));
    out.combined.rows.push_back(row);
  }
  return out;
}

}  // namespace arhate
