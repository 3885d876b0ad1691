#include "arhate/evaluate.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <random>

#include "arhate/csv.hpp"
#include "arhate/error.hpp"

namespace arhate {

using nlohmann::json;

std::size_t FoldPlan::fold_of(const std::string& id) const {
  auto it = assignments.find(id);
  if (it == assignments.end()) throw ValidationError("row '" + id + "' has no fold assignment");
  return it->second;
}

FoldPlan stratified_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified folds need k >= 2 (no held-out data otherwise)");
  ClassVector<std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& row = corpus[i];
    if (row.origin == Origin::gold && row.usable()) by_class[index_of(row.label)].push_back(i);
  }
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    if (by_class[c].size() < k) {
      throw ValidationError("class " + std::string(to_string(label_at(c))) + " has " +
                            std::to_string(by_class[c].size()) + " gold rows, fewer than k=" +
                            std::to_string(k));
    }
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  std::mt19937_64 rng(seed);
  std::size_t position = 0;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[static_cast<std::size_t>(rng() % i)]);
    }
    for (std::size_t idx : members) {
      plan.assignments[corpus[idx].id] = position % k;
      ++position;
    }
  }
  return plan;
}

void write_fold_csv(const std::filesystem::path& path, const FoldPlan& plan) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "id,fold\n";
  for (const auto& [id, fold] : plan.assignments) out << csv::escape(id) << ',' << fold << '\n';
}

std::int64_t ConfusionMatrix::total() const noexcept {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t c) const noexcept {
  std::int64_t t = 0;
  for (auto v : counts[c]) t += v;
  return t;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t c) const noexcept {
  std::int64_t t = 0;
  for (const auto& row : counts) t += row[c];
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) noexcept {
  for (std::size_t r = 0; r < kNumLabels; ++r)
    for (std::size_t c = 0; c < kNumLabels; ++c) counts[r][c] += other.counts[r][c];
  return *this;
}

PerClass per_class_metrics(const ConfusionMatrix& cm) {
  PerClass out{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    const auto gold = cm.row_sum(c);
    const auto predicted = cm.col_sum(c);
    auto& s = out[c];
    s.recall = gold == 0 ? 0.0 : tp / static_cast<double>(gold);
    s.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return out;
}

Supports supports_of(const ConfusionMatrix& cm) {
  Supports s{};
  for (std::size_t c = 0; c < kNumLabels; ++c) s[c] = cm.row_sum(c);
  return s;
}

Aggregates aggregate(const PerClass& per_class, const Supports& supports) {
  Aggregates a;
  double total = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    a.macro_f1 += per_class[c].f1;
    a.weighted_f1 += per_class[c].f1 * static_cast<double>(supports[c]);
    a.micro_f1 += per_class[c].recall * static_cast<double>(supports[c]);
    total += static_cast<double>(supports[c]);
  }
  a.macro_f1 /= static_cast<double>(kNumLabels);
  if (total > 0.0) {
    a.weighted_f1 /= total;
    a.micro_f1 /= total;
  } else {
    a.weighted_f1 = 0.0;
    a.micro_f1 = 0.0;
  }
  return a;
}

namespace {

PerClass to_percent(PerClass p) {
  for (auto& s : p) {
    s.precision *= 100.0;
    s.recall *= 100.0;
    s.f1 *= 100.0;
  }
  return p;
}

Aggregates to_percent(Aggregates a) {
  a.macro_f1 *= 100.0;
  a.micro_f1 *= 100.0;
  a.weighted_f1 *= 100.0;
  return a;
}

FoldResult run_fold(const Corpus& corpus, const ModelRecipe& recipe, const FoldPlan& plan,
                    std::size_t fold) {
  Corpus train;
  std::vector<std::string> test_texts;
  std::vector<Label> test_gold;
  for (const auto& row : corpus) {
    if (!row.usable()) continue;
    if (row.origin == Origin::gold && plan.fold_of(row.id) == fold) {
      test_texts.push_back(row.norm_text);
      test_gold.push_back(row.label);
    } else {
      train.push_back(row);
    }
  }
  FoldResult result;
  result.fold = fold;
  result.train_rows = train.size();
  std::vector<Label> predicted;
  try {
    const Predictor predict = recipe(train);
    predicted = predict(test_texts);
  } catch (const std::exception& e) {
    throw StageError("fold " + std::to_string(fold) + " failed: " + e.what());
  }
  if (predicted.size() != test_texts.size()) {
    throw StageError("fold " + std::to_string(fold) + ": predictor returned the wrong number of labels");
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) result.confusion.add(test_gold[i], predicted[i]);
  const auto fractions = per_class_metrics(result.confusion);
  result.supports = supports_of(result.confusion);
  result.per_class = to_percent(fractions);
  result.aggregates = to_percent(aggregate(fractions, result.supports));
  return result;
}

}  // namespace

MetricsReport cross_validate(const Corpus& corpus, const ModelRecipe& recipe, const FoldPlan& plan,
                             const CrossValidationOptions& options) {
  for (const auto& row : corpus) {
    if (row.origin == Origin::gold && row.usable()) plan.fold_of(row.id);
  }
  MetricsReport report;
  report.k = plan.k;
  report.seed = plan.seed;
  report.folds.resize(plan.k);

  const std::size_t jobs = std::max<std::size_t>(1, options.jobs);
  for (std::size_t start = 0; start < plan.k; start += jobs) {
    const std::size_t end = std::min(plan.k, start + jobs);
    if (jobs == 1) {
      report.folds[start] = run_fold(corpus, recipe, plan, start);
      continue;
    }
    std::vector<std::future<FoldResult>> pending;
    for (std::size_t f = start; f < end; ++f) {
      pending.push_back(std::async(std::launch::async, run_fold, std::cref(corpus),
                                   std::cref(recipe), std::cref(plan), f));
    }
    for (std::size_t f = start; f < end; ++f) report.folds[f] = pending[f - start].get();
  }

  // Fold-mean reduction in fixed fold order.
  const double inv_k = 1.0 / static_cast<double>(plan.k);
  for (const auto& fold : report.folds) {
    report.pooled_confusion += fold.confusion;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      report.per_class[c].precision += fold.per_class[c].precision * inv_k;
      report.per_class[c].recall += fold.per_class[c].recall * inv_k;
      report.per_class[c].f1 += fold.per_class[c].f1 * inv_k;
      report.supports[c] += fold.supports[c];
    }
  }
  // Aggregates come from the fold-mean cells and the total supports so that
  // they can be re-derived from what is emitted. Macro equals the mean of the
  // fold macros; weighted and micro can differ from fold means slightly.
  report.aggregates = aggregate(report.per_class, report.supports);
  const auto pooled = per_class_metrics(report.pooled_confusion);
  report.pooled_per_class = to_percent(pooled);
  report.pooled_aggregates = to_percent(aggregate(pooled, supports_of(report.pooled_confusion)));
  return report;
}

namespace {

json per_class_json(const PerClass& p) {
  json out = json::object();
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    out[std::string(to_string(label_at(c)))] = {
        {"precision", p[c].precision}, {"recall", p[c].recall}, {"f1", p[c].f1}};
  }
  return out;
}

json supports_json(const Supports& s) {
  json out = json::object();
  for (std::size_t c = 0; c < kNumLabels; ++c) out[std::string(to_string(label_at(c)))] = s[c];
  return out;
}

json aggregates_json(const Aggregates& a) {
  return {{"macro_f1", a.macro_f1}, {"micro_f1", a.micro_f1}, {"weighted_f1", a.weighted_f1}};
}

json confusion_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (const auto& row : cm.counts) rows.push_back(row);
  return rows;
}

PerClass per_class_from(const json& j) {
  PerClass p{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const auto& e = j.at(std::string(to_string(label_at(c))));
    p[c] = {e.at("precision").get<double>(), e.at("recall").get<double>(), e.at("f1").get<double>()};
  }
  return p;
}

Supports supports_from(const json& j) {
  Supports s{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    s[c] = j.at(std::string(to_string(label_at(c)))).get<std::int64_t>();
  }
  return s;
}

Aggregates aggregates_from(const json& j) {
  return {j.at("macro_f1").get<double>(), j.at("micro_f1").get<double>(),
          j.at("weighted_f1").get<double>()};
}

ConfusionMatrix confusion_from(const json& j) {
  ConfusionMatrix cm;
  for (std::size_t r = 0; r < kNumLabels; ++r)
    for (std::size_t c = 0; c < kNumLabels; ++c) cm.counts[r][c] = j.at(r).at(c).get<std::int64_t>();
  return cm;
}

}  // namespace

json to_json(const MetricsReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"train_rows", f.train_rows},
                     {"per_class", per_class_json(f.per_class)},
                     {"supports", supports_json(f.supports)},
                     {"aggregates", aggregates_json(f.aggregates)},
                     {"confusion", confusion_json(f.confusion)}});
  }
  return {{"schema", "arhate.metrics/1"},
          {"scale", "percent"},
          {"averaging", "fold-mean"},
          {"k", r.k},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"per_class", per_class_json(r.per_class)},
          {"supports", supports_json(r.supports)},
          {"aggregates", aggregates_json(r.aggregates)},
          {"pooled",
           {{"per_class", per_class_json(r.pooled_per_class)},
            {"aggregates", aggregates_json(r.pooled_aggregates)},
            {"confusion", confusion_json(r.pooled_confusion)}}},
          {"fold_detail", folds}};
}

MetricsReport metrics_from_json(const json& doc) {
  try {
    if (doc.at("schema") != "arhate.metrics/1") throw ValidationError("unsupported metrics schema");
    MetricsReport r;
    r.k = doc.at("k").get<std::size_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config_hash = doc.value("config_hash", std::string());
    r.per_class = per_class_from(doc.at("per_class"));
    r.supports = supports_from(doc.at("supports"));
    r.aggregates = aggregates_from(doc.at("aggregates"));
    const auto& pooled = doc.at("pooled");
    r.pooled_per_class = per_class_from(pooled.at("per_class"));
    r.pooled_aggregates = aggregates_from(pooled.at("aggregates"));
    r.pooled_confusion = confusion_from(pooled.at("confusion"));
    for (const auto& f : doc.at("fold_detail")) {
      FoldResult fr;
      fr.fold = f.at("fold").get<std::size_t>();
      fr.train_rows = f.at("train_rows").get<std::size_t>();
      fr.per_class = per_class_from(f.at("per_class"));
      fr.supports = supports_from(f.at("supports"));
      fr.aggregates = aggregates_from(f.at("aggregates"));
      fr.confusion = confusion_from(f.at("confusion"));
      r.folds.push_back(fr);
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed metrics JSON: ") + e.what());
  }
}

}  // namespace arhate
