#include "arhate/augment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

namespace arhate {

using nlohmann::json;

void AugmentPlan::validate() const {
  std::set<std::string> direct(direct_sources.begin(), direct_sources.end());
  for (const auto& key : pseudo_sources) {
    if (direct.contains(key)) {
      throw ValidationError("source '" + key + "' is both a direct and a pseudo-label source");
    }
  }
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw ValidationError("confidence_threshold must lie in [0, 1]");
  }
  if (!pseudo_sources.empty() && labeler.members.empty()) {
    throw ValidationError("pseudo-labelling needs at least one labeler member");
  }
  for (const auto& m : labeler.members) validate_member(m);
  if (labeler.members.size() > 1) labeler.vote.validate(labeler.members.size());
}

ModelMember member_from_json(const json& j) {
  ModelMember m;
  m.spec.backend_key = j.at("backend").get<std::string>();
  m.spec.max_sequence_tokens = j.value("max_sequence_tokens", m.spec.max_sequence_tokens);
  m.hp.epochs = j.value("epochs", m.hp.epochs);
  m.hp.batch_size = j.value("batch_size", m.hp.batch_size);
  m.hp.learning_rate = j.value("learning_rate", m.hp.learning_rate);
  m.hp.seed = j.value("seed", m.hp.seed);
  return m;
}

json member_to_json(const ModelMember& m) {
  return {{"backend", m.spec.backend_key},
          {"max_sequence_tokens", m.spec.max_sequence_tokens},
          {"epochs", m.hp.epochs},
          {"batch_size", m.hp.batch_size},
          {"learning_rate", m.hp.learning_rate},
          {"seed", m.hp.seed}};
}

std::pair<AugmentPlan, std::filesystem::path> load_augment_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open augment plan " + path.string());
  try {
    const auto doc = json::parse(in);
    AugmentPlan plan;
    plan.direct_sources = doc.value("direct_sources", std::vector<std::string>{});
    plan.pseudo_sources = doc.value("pseudo_sources", std::vector<std::string>{});
    plan.confidence_threshold = doc.value("confidence_threshold", 0.0);
    if (doc.contains("labeler")) {
      const auto& l = doc["labeler"];
      for (const auto& m : l.value("members", json::array())) plan.labeler.members.push_back(member_from_json(m));
      plan.labeler.vote.mode = parse_vote_mode(l.value("mode", std::string("majority")));
      plan.labeler.vote.weights = l.value("weights", std::vector<double>{});
    }
    plan.validate();
    std::filesystem::path registry = doc.at("registry").get<std::string>();
    if (registry.is_relative()) registry = path.parent_path() / registry;
    return {plan, registry};
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::size_t SourceTally::added_total() const noexcept {
  std::size_t n = 0;
  for (auto a : added) n += a;
  return n;
}

bool SourceTally::reconciles() const noexcept {
  return rows == added_total() + discarded_nh + discarded_low_confidence + discarded_duplicates +
                     discarded_empty;
}

void AugmentReport::absorb(const AugmentReport& other) {
  added_direct += other.added_direct;
  for (std::size_t c = 0; c < kNumLabels; ++c) pseudo_counts[c] += other.pseudo_counts[c];
  discarded_nh += other.discarded_nh;
  discarded_low_confidence += other.discarded_low_confidence;
  discarded_duplicates += other.discarded_duplicates;
  discarded_empty += other.discarded_empty;
  sources.insert(sources.end(), other.sources.begin(), other.sources.end());
}

bool AugmentReport::reconciles() const noexcept {
  std::size_t rows = 0;
  std::size_t accounted = added_direct + discarded_nh + discarded_low_confidence +
                          discarded_duplicates + discarded_empty;
  for (auto c : pseudo_counts) accounted += c;
  for (const auto& s : sources) {
    if (!s.reconciles()) return false;
    rows += s.rows;
  }
  return rows == accounted && pseudo_counts[index_of(Label::NH)] == 0;
}

json to_json(const AugmentReport& r) {
  auto per_class = [](const ClassVector<std::size_t>& v) {
    json out = json::object();
    for (std::size_t c = 0; c < kNumLabels; ++c) out[std::string(to_string(label_at(c)))] = v[c];
    return out;
  };
  json sources = json::array();
  for (const auto& s : r.sources) {
    sources.push_back({{"key", s.key},
                       {"kind", s.direct ? "direct" : "pseudo"},
                       {"rows", s.rows},
                       {"added", per_class(s.added)},
                       {"discarded_nh", s.discarded_nh},
                       {"discarded_low_confidence", s.discarded_low_confidence},
                       {"discarded_duplicates", s.discarded_duplicates},
                       {"discarded_empty", s.discarded_empty}});
  }
  return {{"added_direct", r.added_direct},
          {"pseudo_counts", per_class(r.pseudo_counts)},
          {"discarded_nh", r.discarded_nh},
          {"discarded_low_confidence", r.discarded_low_confidence},
          {"discarded_duplicates", r.discarded_duplicates},
          {"discarded_empty", r.discarded_empty},
          {"sources", sources}};
}

Labeler::Labeler(std::vector<std::shared_ptr<const TrainedModel>> models, VoteConfig vote)
    : models_(std::move(models)), vote_(std::move(vote)) {
  if (models_.size() > 1) vote_.validate(models_.size());
}

Labeler Labeler::train(const LabelerSpec& spec, const Corpus& base) {
  if (spec.members.empty()) throw ValidationError("labeler has no members");
  Corpus gold;
  for (const auto& row : base) {
    if (row.origin == Origin::gold && row.usable()) gold.push_back(row);
  }
  std::vector<std::shared_ptr<const TrainedModel>> models;
  for (const auto& m : spec.members) models.push_back(fit(m.spec, m.hp, gold));
  return Labeler(std::move(models), spec.vote);
}

std::vector<ProbabilityMatrix> Labeler::member_probabilities(const std::vector<std::string>& ids,
                                                             const std::vector<std::string>& texts) const {
  if (!trained()) throw ValidationError("labeler is untrained");
  std::vector<ProbabilityMatrix> out;
  for (const auto& model : models_) out.push_back(predict_proba(*model, ids, texts));
  return out;
}

std::vector<Labeler::Decision> Labeler::classify(const std::vector<std::string>& ids,
                                                 const std::vector<std::string>& texts) const {
  const auto matrices = member_probabilities(ids, texts);
  std::vector<Decision> out(texts.size());
  if (matrices.size() == 1) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto label = argmax(matrices[0].rows[i]);
      out[i] = {label, matrices[0].rows[i][index_of(label)]};
    }
    return out;
  }
  if (vote_.mode == VoteMode::average) {
    const auto avg = average_vote(matrices, vote_.weights);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      out[i] = {avg.labels[i], avg.combined.rows[i][index_of(avg.labels[i])]};
    }
    return out;
  }
  const auto labels = majority_vote(matrices);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    double mean = 0.0;
    for (const auto& m : matrices) mean += m.rows[i][index_of(labels[i])];
    out[i] = {labels[i], mean / static_cast<double>(matrices.size())};
  }
  return out;
}

namespace {

std::unordered_set<std::string> texts_of(const Corpus& corpus) {
  std::unordered_set<std::string> seen;
  for (const auto& row : corpus) {
    if (!row.norm_text.empty()) seen.insert(row.norm_text);
  }
  return seen;
}

LabeledText derived_row(const LabeledText& source_row, const std::string& key, Label label, Origin origin) {
  LabeledText t = source_row;
  t.source = key;
  if (t.id.rfind(key + ":", 0) != 0) t.id = key + ":" + t.id;
  t.label = label;
  t.origin = origin;
  return t;
}

void require_normalized(const SourceRows& source) {
  for (const auto& row : source.rows) {
    if (!row.normalized) {
      throw ValidationError("source '" + source.descriptor.key + "' row '" + row.id + "' is not normalized");
    }
  }
}

}  // namespace

std::pair<Corpus, AugmentReport> direct_merge(const Corpus& base, std::span<const SourceRows> sources) {
  Corpus out = base;
  AugmentReport report;
  auto seen = texts_of(base);
  for (const auto& source : sources) {
    if (!source.descriptor.hate_only) {
      throw ValidationError("direct-merge source '" + source.descriptor.key + "' is not marked hate_only");
    }
    require_normalized(source);
    SourceTally tally{.key = source.descriptor.key, .direct = true, .rows = source.rows.size()};
    for (const auto& row : source.rows) {
      if (row.norm_text.empty()) {
        ++tally.discarded_empty;
      } else if (!seen.insert(row.norm_text).second) {
        ++tally.discarded_duplicates;
      } else {
        out.push_back(derived_row(row, source.descriptor.key, Label::Re, Origin::direct_merge));
        ++tally.added[index_of(Label::Re)];
      }
    }
    report.added_direct += tally.added_total();
    report.discarded_duplicates += tally.discarded_duplicates;
    report.discarded_empty += tally.discarded_empty;
    spdlog::info("direct merge '{}': {} added, {} duplicates", tally.key, tally.added_total(),
                 tally.discarded_duplicates);
    report.sources.push_back(tally);
  }
  return {std::move(out), std::move(report)};
}

std::pair<Corpus, AugmentReport> pseudo_label(const Labeler& labeler, const Corpus& existing,
                                              std::span<const SourceRows> sources,
                                              const AugmentPlan& plan) {
  if (!labeler.trained()) throw ValidationError("pseudo-labelling needs a trained labeler");
  Corpus added;
  AugmentReport report;
  auto seen = texts_of(existing);
  for (const auto& source : sources) {
    require_normalized(source);
    SourceTally tally{.key = source.descriptor.key, .direct = false, .rows = source.rows.size()};
    std::vector<const LabeledText*> candidates;
    for (const auto& row : source.rows) {
      if (row.norm_text.empty()) {
        ++tally.discarded_empty;
      } else if (!seen.insert(row.norm_text).second) {
        ++tally.discarded_duplicates;
      } else {
        candidates.push_back(&row);
      }
    }
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    for (const auto* row : candidates) {
      ids.push_back(row->id);
      texts.push_back(row->norm_text);
    }
    const auto decisions = labeler.classify(ids, texts);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& d = decisions[i];
      if (d.label == Label::NH) {
        ++tally.discarded_nh;
      } else if (d.confidence < plan.confidence_threshold) {
        ++tally.discarded_low_confidence;
      } else {
        added.push_back(derived_row(*candidates[i], source.descriptor.key, d.label, Origin::pseudo));
        ++tally.added[index_of(d.label)];
      }
    }
    for (std::size_t c = 0; c < kNumLabels; ++c) report.pseudo_counts[c] += tally.added[c];
    report.discarded_nh += tally.discarded_nh;
    report.discarded_low_confidence += tally.discarded_low_confidence;
    report.discarded_duplicates += tally.discarded_duplicates;
    report.discarded_empty += tally.discarded_empty;
    spdlog::info("pseudo labels '{}': {} added, {} NH, {} low confidence, {} duplicates", tally.key,
                 tally.added_total(), tally.discarded_nh, tally.discarded_low_confidence,
                 tally.discarded_duplicates);
    report.sources.push_back(tally);
  }
  return {std::move(added), std::move(report)};
}

namespace {

std::vector<SourceRows> select_sources(std::span<const SourceRows> sources,
                                       const std::vector<std::string>& keys) {
  std::vector<SourceRows> out;
  for (const auto& key : keys) {
    auto it = std::find_if(sources.begin(), sources.end(),
                           [&](const SourceRows& s) { return s.descriptor.key == key; });
    if (it == sources.end()) throw ValidationError("augment source '" + key + "' was not loaded");
    out.push_back(*it);
  }
  return out;
}

}  // namespace

std::pair<Corpus, AugmentReport> build_augmented_corpus(const Corpus& base, const AugmentPlan& plan,
                                                        std::span<const SourceRows> sources,
                                                        const Labeler& labeler) {
  plan.validate();
  const auto direct = select_sources(sources, plan.direct_sources);
  const auto pseudo = select_sources(sources, plan.pseudo_sources);

  auto [merged, report] = direct_merge(base, direct);
  {
    std::unordered_set<std::string> ids;
    for (const auto& row : merged) {
      if (!ids.insert(row.id).second) throw ValidationError("id collision for direct row '" + row.id + "'");
    }
  }
  if (!pseudo.empty()) {
    auto [pseudo_rows, pseudo_report] = pseudo_label(labeler, merged, pseudo, plan);
    report.absorb(pseudo_report);
    // Already de-duplicated against `merged`; plain append keeps gold ids verbatim.
    std::unordered_set<std::string> ids;
    for (const auto& row : merged) ids.insert(row.id);
    for (auto& row : pseudo_rows) {
      if (!ids.insert(row.id).second) throw ValidationError("id collision for pseudo row '" + row.id + "'");
      merged.push_back(std::move(row));
    }
  }
  return {std::move(merged), std::move(report)};
}

std::pair<Corpus, AugmentReport> build_augmented_corpus(const Corpus& base, const AugmentPlan& plan,
                                                        std::span<const SourceRows> sources) {
  plan.validate();
  if (plan.direct_sources.empty() && plan.pseudo_sources.empty()) return {base, AugmentReport{}};
  Labeler labeler;
  if (!plan.pseudo_sources.empty()) labeler = Labeler::train(plan.labeler, base);
  return build_augmented_corpus(base, plan, sources, labeler);
}

}  // namespace arhate
