#pragma once

#include <span>
#include <vector>

#include "arhate/probability.hpp"

namespace arhate {

enum class VoteMode { majority, average };

struct VoteConfig {
  VoteMode mode = VoteMode::majority;
  /// One non-negative weight per model; empty means uniform.
  std::vector<double> weights;

  void validate(std::size_t models) const;
};

std::string_view to_string(VoteMode mode) noexcept;
VoteMode parse_vote_mode(std::string_view text);

/// Hard voting. Each model votes its argmax; most votes wins. Ties go to the
/// tied class with the largest probability sum across models, then to the
/// earliest column. Needs at least two matrices with identical ids.
std::vector<Label> majority_vote(std::span<const ProbabilityMatrix> matrices);

/// Fraction of model votes per class; rows sum to 1.
ProbabilityMatrix vote_shares(std::span<const ProbabilityMatrix> matrices);

struct AverageVote {
  std::vector<Label> labels;
  ProbabilityMatrix combined;
};

/// Soft voting: weight-normalized mean of the rows, argmax with ties to the
/// earliest column.
AverageVote average_vote(std::span<const ProbabilityMatrix> matrices,
                         std::span<const double> weights = {});

}  // namespace arhate
