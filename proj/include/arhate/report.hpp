#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arhate/corpus.hpp"
#include "arhate/evaluate.hpp"

namespace arhate {

/// A published comparison row, display-only. Values are stored as published
/// (`scale` 100 for percentages, 1 for the 0-1 scale).
struct BaselineRow {
  std::string group;
  int table = 0;
  std::string system;
  std::string citation;
  double scale = 100.0;
  ClassVector<double> f1{};
  double macro = 0.0;
  std::optional<double> micro;
  double weighted = 0.0;
};

struct BaselineTable {
  /// Class supports used to recompute the weighted column of reference rows.
  Supports supports{};
  std::vector<BaselineRow> rows;
  /// Group keys in display order with their titles.
  std::vector<std::pair<std::string, std::string>> groups;
};

BaselineTable load_baselines(const std::filesystem::path& path);

struct ConsistencyCheck {
  double recomputed_macro = 0.0;
  double recomputed_weighted = 0.0;
  std::optional<double> recomputed_micro;
  bool flagged = false;
};

/// Recomputes macro and weighted F1 (and micro when recalls are given) from
/// per-class cells and compares with the stored aggregates. Values and
/// tolerance share the row's own scale.
ConsistencyCheck check_consistency(const ClassVector<double>& f1, const Supports& supports,
                                   double stored_macro, double stored_weighted,
                                   std::optional<double> stored_micro = std::nullopt,
                                   const std::optional<ClassVector<double>>& recalls = std::nullopt,
                                   double tolerance = 0.02);

enum class ReportFormat { markdown, csv };
ReportFormat parse_report_format(std::string_view text);

/// Comparison tables with the reference rows and each run's fold-mean and
/// pooled rows, all in percent. Markdown output adds per-run sections for
/// whatever artifacts the run directory holds (corpus statistics, search
/// trace, augmentation counts, confusion matrix). Pure: same inputs, same
/// bytes. Throws ValidationError listing runs without metrics.json.
/// Per-class and total counts in the layout of the corpus statistics table.
nlohmann::json stats_to_json(const CorpusStats& stats);

std::string render(std::span<const std::filesystem::path> run_dirs, const BaselineTable& baselines,
                   ReportFormat format);

}  // namespace arhate
