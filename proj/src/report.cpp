#include "arhate/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "arhate/csv.hpp"
#include "arhate/error.hpp"

namespace arhate {

using nlohmann::json;

namespace {

// Column order of the published comparison tables.
constexpr std::array<Label, kNumLabels> kDisplayOrder{Label::NH, Label::Se, Label::Re, Label::GH,
                                                      Label::Ra};

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string pct(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

BaselineTable load_baselines(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  try {
    BaselineTable t;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      t.supports[c] = doc.at("supports").at(std::string(to_string(label_at(c)))).get<std::int64_t>();
    }
    for (const auto& g : doc.at("groups")) {
      t.groups.emplace_back(g.at("key").get<std::string>(), g.at("title").get<std::string>());
    }
    for (const auto& r : doc.at("rows")) {
      BaselineRow row;
      row.group = r.at("group").get<std::string>();
      row.table = r.at("table").get<int>();
      row.system = r.at("system").get<std::string>();
      row.citation = r.value("citation", std::string());
      const auto scale = r.value("scale", std::string("percent"));
      if (scale == "percent") {
        row.scale = 100.0;
      } else if (scale == "unit") {
        row.scale = 1.0;
      } else {
        throw ValidationError(path.string() + ": unknown scale '" + scale + "'");
      }
      for (std::size_t c = 0; c < kNumLabels; ++c) {
        row.f1[c] = r.at("f1").at(std::string(to_string(label_at(c)))).get<double>();
      }
      row.macro = r.at("macro").get<double>();
      if (r.contains("micro") && !r["micro"].is_null()) row.micro = r["micro"].get<double>();
      row.weighted = r.at("weighted").get<double>();
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

ConsistencyCheck check_consistency(const ClassVector<double>& f1, const Supports& supports,
                                   double stored_macro, double stored_weighted,
                                   std::optional<double> stored_micro,
                                   const std::optional<ClassVector<double>>& recalls,
                                   double tolerance) {
  PerClass cells{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    cells[c].f1 = f1[c];
    if (recalls) cells[c].recall = (*recalls)[c];
  }
  const auto a = aggregate(cells, supports);
  ConsistencyCheck check;
  check.recomputed_macro = a.macro_f1;
  check.recomputed_weighted = a.weighted_f1;
  check.flagged = std::abs(a.macro_f1 - stored_macro) > tolerance ||
                  std::abs(a.weighted_f1 - stored_weighted) > tolerance;
  if (recalls && stored_micro) {
    check.recomputed_micro = a.micro_f1;
    check.flagged = check.flagged || std::abs(a.micro_f1 - *stored_micro) > tolerance;
  }
  return check;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "markdown") return ReportFormat::markdown;
  if (text == "csv") return ReportFormat::csv;
  throw ValidationError("unknown report format '" + std::string(text) + "'");
}

json stats_to_json(const CorpusStats& s) {
  json per_class = json::object();
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    per_class[std::string(to_string(label_at(c)))] = {{"texts", s.per_class_count[c]},
                                                      {"words", s.per_class_words[c]},
                                                      {"unique_words", s.per_class_unique[c]}};
  }
  return {{"per_class", per_class},
          {"texts", s.size()},
          {"words", s.word_count},
          {"unique_words", s.unique_words},
          {"avg_words_per_text", s.avg_words_per_text}};
}

namespace {

/// One display row, every number in percent.
struct Row {
  std::string system;
  std::string kind;  // "reference" | "fold-mean" | "pooled"
  ClassVector<double> f1{};
  double macro = 0.0;
  std::optional<double> micro;
  double weighted = 0.0;
  ConsistencyCheck check;
  std::string note;
};

Row reference_row(const BaselineRow& b, const Supports& supports) {
  Row r;
  r.system = b.citation.empty() ? b.system : b.system + " [" + b.citation + "]";
  r.kind = "reference";
  // Tolerance applies in the published scale, then everything goes to percent.
  ClassVector<double> native = b.f1;
  r.check = check_consistency(native, supports, b.macro, b.weighted);
  const double to_pct = 100.0 / b.scale;
  for (std::size_t c = 0; c < kNumLabels; ++c) r.f1[c] = b.f1[c] * to_pct;
  r.macro = b.macro * to_pct;
  if (b.micro) r.micro = *b.micro * to_pct;
  r.weighted = b.weighted * to_pct;
  r.check.recomputed_macro *= to_pct;
  r.check.recomputed_weighted *= to_pct;
  if (b.scale != 100.0) r.note = "converted from 0-1 scale";
  return r;
}

Row run_row(const std::string& name, const std::string& kind, const PerClass& per_class,
            const Supports& supports, const Aggregates& agg) {
  Row r;
  r.system = name;
  r.kind = kind;
  ClassVector<double> recalls{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    r.f1[c] = per_class[c].f1;
    recalls[c] = per_class[c].recall;
  }
  r.macro = agg.macro_f1;
  r.micro = agg.micro_f1;
  r.weighted = agg.weighted_f1;
  r.check = check_consistency(r.f1, supports, agg.macro_f1, agg.weighted_f1, agg.micro_f1, recalls);
  return r;
}

struct RunData {
  std::string name;
  std::filesystem::path dir;
  MetricsReport metrics;
};

std::string check_cell(const Row& r) {
  if (!r.check.flagged) return "ok";
  std::string s = fmt::format("FLAG macro {} weighted {}", pct(r.check.recomputed_macro),
                              pct(r.check.recomputed_weighted));
  if (r.check.recomputed_micro) s += " micro " + pct(*r.check.recomputed_micro);
  return s;
}

void markdown_table(std::ostringstream& out, const std::vector<Row>& rows) {
  out << "| System | Kind |";
  for (Label l : kDisplayOrder) out << ' ' << to_string(l) << " |";
  out << " Ma | Mi | W | Check |\n|---|---|";
  for (std::size_t i = 0; i < kNumLabels + 4; ++i) out << "---|";
  out << '\n';
  for (const auto& r : rows) {
    out << "| " << r.system << " | " << r.kind << (r.note.empty() ? "" : " (" + r.note + ")") << " |";
    for (Label l : kDisplayOrder) out << ' ' << pct(r.f1[index_of(l)]) << " |";
    out << ' ' << pct(r.macro) << " | " << (r.micro ? pct(*r.micro) : "-") << " | " << pct(r.weighted)
        << " | " << check_cell(r) << " |\n";
  }
}

void run_sections(std::ostringstream& out, const RunData& run) {
  out << "\n## Run " << run.name << "\n";
  out << "\nEvaluation: " << run.metrics.k << "-fold stratified cross-validation, seed "
      << run.metrics.seed << ". Fold-mean rows average per-fold scores; pooled rows score all "
      << "held-out predictions together.\n";

  const auto stats_path = run.dir / "stats.json";
  if (std::filesystem::exists(stats_path)) {
    const auto s = read_json(stats_path);
    out << "\n### Corpus statistics\n\n| | NH | GH | Re | Ra | Se | Total |\n|---|---|---|---|---|---|---|\n";
    auto line = [&](const std::string& title, auto cell, auto total) {
      out << "| " << title << " |";
      for (Label l : kAllLabels) out << ' ' << cell(s.at("per_class").at(std::string(to_string(l)))) << " |";
      out << ' ' << total << " |\n";
    };
    line("Number of texts", [](const json& c) { return std::to_string(c.at("texts").get<std::size_t>()); },
         std::to_string(s.at("texts").get<std::size_t>()));
    line("Word count", [](const json& c) { return std::to_string(c.at("words").get<std::size_t>()); },
         std::to_string(s.at("words").get<std::size_t>()));
    line("Unique words", [](const json& c) { return std::to_string(c.at("unique_words").get<std::size_t>()); },
         std::to_string(s.at("unique_words").get<std::size_t>()));
    line("Average words per text",
         [](const json& c) {
           const auto n = c.at("texts").get<double>();
           return fmt::format("{:.1f}", n == 0 ? 0.0 : c.at("words").get<double>() / n);
         },
         fmt::format("{:.1f}", s.at("avg_words_per_text").get<double>()));
  }

  const auto tune_dir = run.dir / "tune";
  if (std::filesystem::is_directory(tune_dir)) {
    std::vector<std::filesystem::path> members;
    for (const auto& entry : std::filesystem::directory_iterator(tune_dir)) {
      if (entry.is_directory() && std::filesystem::exists(entry.path() / "trace.csv")) {
        members.push_back(entry.path());
      }
    }
    std::sort(members.begin(), members.end());
    for (const auto& m : members) {
      out << "\n### Hyperparameter search: " << m.filename().string()
          << " (micro F1 %)\n\n| Stage | Epochs | Batch size | Learning rate | Micro F1 | Status |\n"
          << "|---|---|---|---|---|---|\n";
      std::ifstream in(m / "trace.csv");
      csv::Reader reader(in, ',', (m / "trace.csv").string());
      reader.next();
      while (auto rec = reader.next()) {
        if (rec->size() != 6) continue;
        const auto& f = *rec;
        out << "| " << f[0] << " | " << f[1] << " | " << f[2] << " | " << f[3] << " | "
            << (f[4].empty() ? std::string("-") : pct(std::stod(f[4]))) << " | " << f[5] << " |\n";
      }
    }
  }

  const auto augment_path = run.dir / "augment_report.json";
  if (std::filesystem::exists(augment_path)) {
    const auto a = read_json(augment_path);
    out << "\n### Pseudo-label predictions\n\n| Predicted class | GH | Re | Se | Ra |\n|---|---|---|---|---|\n"
        << "| Number of texts |";
    for (Label l : {Label::GH, Label::Re, Label::Se, Label::Ra}) {
      out << ' ' << a.at("pseudo_counts").at(std::string(to_string(l))).get<std::size_t>() << " |";
    }
    out << "\n\nDirectly merged: " << a.at("added_direct").get<std::size_t>()
        << "; discarded as NH: " << a.at("discarded_nh").get<std::size_t>()
        << "; below confidence: " << a.at("discarded_low_confidence").get<std::size_t>()
        << "; duplicates: " << a.at("discarded_duplicates").get<std::size_t>()
        << "; empty after normalization: " << a.at("discarded_empty").get<std::size_t>() << ".\n";
  }

  out << "\n### Pooled confusion matrix (rows gold, columns predicted)\n\n| |";
  for (Label l : kAllLabels) out << ' ' << to_string(l) << " |";
  out << "\n|---|---|---|---|---|---|\n";
  for (std::size_t r = 0; r < kNumLabels; ++r) {
    out << "| " << to_string(label_at(r)) << " |";
    for (std::size_t c = 0; c < kNumLabels; ++c) out << ' ' << run.metrics.pooled_confusion.counts[r][c] << " |";
    out << '\n';
  }
}

}  // namespace

std::string render(std::span<const std::filesystem::path> run_dirs, const BaselineTable& baselines,
                   ReportFormat format) {
  std::vector<RunData> runs;
  std::vector<std::string> missing;
  for (const auto& dir : run_dirs) {
    const auto path = dir / "metrics.json";
    if (!std::filesystem::exists(path)) {
      missing.push_back(dir.string());
      continue;
    }
    auto name = dir.filename().string();
    if (name.empty()) name = dir.parent_path().filename().string();
    runs.push_back({name, dir, metrics_from_json(read_json(path))});
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("missing metrics.json for run(s): " + list);
  }

  std::vector<Row> run_rows;
  for (const auto& run : runs) {
    run_rows.push_back(run_row(run.name, "fold-mean", run.metrics.per_class, run.metrics.supports,
                               run.metrics.aggregates));
    run_rows.push_back(run_row(run.name, "pooled", run.metrics.pooled_per_class,
                               supports_of(run.metrics.pooled_confusion), run.metrics.pooled_aggregates));
  }

  std::vector<std::pair<std::string, std::vector<Row>>> tables;
  for (const auto& [key, title] : baselines.groups) {
    std::vector<Row> rows;
    for (const auto& b : baselines.rows) {
      if (b.group == key) rows.push_back(reference_row(b, baselines.supports));
    }
    rows.insert(rows.end(), run_rows.begin(), run_rows.end());
    tables.emplace_back(title, std::move(rows));
  }
  if (tables.empty() && !run_rows.empty()) tables.emplace_back("Runs", run_rows);

  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "table,system,kind,NH,Se,Re,GH,Ra,macro,micro,weighted,recomputed_macro,recomputed_weighted,flagged\n";
    for (const auto& [title, rows] : tables) {
      for (const auto& r : rows) {
        std::vector<std::string> f{title, r.system, r.kind};
        for (Label l : kDisplayOrder) f.push_back(pct(r.f1[index_of(l)]));
        f.push_back(pct(r.macro));
        f.push_back(r.micro ? pct(*r.micro) : "");
        f.push_back(pct(r.weighted));
        f.push_back(pct(r.check.recomputed_macro));
        f.push_back(pct(r.check.recomputed_weighted));
        f.push_back(r.check.flagged ? "1" : "0");
        out << csv::join(f) << '\n';
      }
    }
    return out.str();
  }

  out << "# Experiment report\n\nAll scores are F1 percentages. Ma, Mi and W are macro, micro "
         "and weighted averages. The Check column recomputes Ma and W (and Mi where recalls are "
         "known) from the per-class cells and flags differences above 0.02 in the row's "
         "published scale.\n";
  for (const auto& [title, rows] : tables) {
    out << "\n## " << title << "\n\n";
    markdown_table(out, rows);
  }
  for (const auto& run : runs) run_sections(out, run);
  return out.str();
}

}  // namespace arhate
