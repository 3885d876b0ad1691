#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "arhate/label.hpp"

namespace arhate {

using ProbRow = ClassVector<double>;

/// N x 5 class probabilities; columns follow Label order (NH, GH, Re, Ra, Se).
struct ProbabilityMatrix {
  std::vector<std::string> ids;
  std::vector<ProbRow> rows;

  std::size_t size() const noexcept { return rows.size(); }

  /// Throws ValidationError if |ids| != |rows|, an entry is negative or
  /// non-finite, or a row sum is off by more than tolerance.
  void validate(double tolerance = 1e-6) const;
};

/// First column holding the maximum (NH wins exact ties).
Label argmax(const ProbRow& row) noexcept;

/// Cache format: header "id,p_NH,p_GH,p_Re,p_Ra,p_Se", one row per id.
void write_probability_csv(const std::filesystem::path& path, const ProbabilityMatrix& m);
ProbabilityMatrix read_probability_csv(const std::filesystem::path& path);

void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<Label>& labels);

}  // namespace arhate
