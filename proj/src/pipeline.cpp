#include "arhate/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <unordered_set>

#include "arhate/hashing.hpp"
#include "arhate/report.hpp"

namespace arhate {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

fs::path resolve(const fs::path& base_dir, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_relative() ? (base_dir / p).lexically_normal() : p;
}

std::string member_name(std::size_t index, const ModelMember& m) {
  return "m" + std::to_string(index) + "-" + m.spec.backend_key;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("cannot write " + path.string());
  out << text;
  if (!out) throw StageError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StageError("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace

json ExperimentConfig::snapshot() const {
  json members_json = json::array();
  for (const auto& m : members) members_json.push_back(member_to_json(m));
  return {
      {"seed", seed},
      {"paths",
       {{"registry", paths.registry.string()},
        {"stopwords", paths.stopwords.string()},
        {"baselines", paths.baselines.string()}}},
      {"corpus", {{"base", base_corpus}, {"dedup", dedup}}},
      {"normalize",
       {{"repeat_collapse_len", normalize.repeat_collapse_len},
        {"strip_non_arabic", normalize.strip_non_arabic}}},
      {"encoder", {{"members", members_json}}},
      {"tune",
       {{"enabled", tune_enabled},
        {"folds", tune_folds},
        {"protocol", "stratified k-fold cross-validation"},
        {"grid",
         {{"epochs", grid.epochs_axis},
          {"batch_size", grid.batch_axis},
          {"learning_rate", grid.lr_axis},
          {"initial",
           {{"epochs", grid.initial.epochs},
            {"batch_size", grid.initial.batch_size},
            {"learning_rate", grid.initial.learning_rate}}}}}}},
      {"ensemble", {{"mode", to_string(vote.mode)}, {"weights", vote.weights}}},
      {"augment",
       {{"enabled", augment_enabled},
        {"direct_sources", direct_sources},
        {"pseudo_sources", pseudo_sources},
        {"confidence_threshold", confidence_threshold}}},
      {"evaluate", {{"folds", folds}, {"jobs", jobs}}},
  };
}

void ExperimentConfig::validate() const {
  if (base_corpus.empty()) throw ValidationError("config: corpus.base is required");
  if (paths.registry.empty()) throw ValidationError("config: paths.registry is required");
  normalize.validate();
  if (members.empty()) throw ValidationError("config: encoder.members is empty");
  for (const auto& m : members) validate_member(m);
  if (tune_enabled) {
    grid.validate();
    if (tune_folds < 2) throw ValidationError("config: tune.folds must be at least 2");
  }
  if (members.size() > 1) vote.validate(members.size());
  if (augment_enabled) augment_plan().validate();
  if (folds < 2) throw ValidationError("config: evaluate.folds must be at least 2");
  if (jobs < 1) throw ValidationError("config: evaluate.jobs must be at least 1");
}

void ExperimentConfig::apply_seed(std::uint64_t s) {
  seed = s;
  for (std::size_t i = 0; i < members.size(); ++i) members[i].hp.seed = s + i;
  grid.initial.seed = s;
}

AugmentPlan ExperimentConfig::augment_plan() const {
  AugmentPlan plan;
  plan.direct_sources = direct_sources;
  plan.pseudo_sources = pseudo_sources;
  plan.confidence_threshold = confidence_threshold;
  plan.labeler.members = members;
  plan.labeler.vote = vote;
  return plan;
}

ExperimentConfig config_from_json(const json& doc, const fs::path& base_dir) {
  try {
    check_keys(doc, {"seed", "paths", "corpus", "normalize", "encoder", "tune", "ensemble", "augment",
                     "evaluate"},
               "config");
    ExperimentConfig c;
    const auto section = [&](const char* name) { return doc.contains(name) ? doc[name] : json::object(); };

    const auto paths = section("paths");
    check_keys(paths, {"registry", "stopwords", "baselines"}, "config.paths");
    std::map<std::string, std::string> raw_paths;
    for (const char* key : {"registry", "stopwords", "baselines"}) {
      raw_paths[key] = paths.value(key, std::string());
      std::string env = std::string("ARHATE_PATHS_") + key;
      for (auto& ch : env) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (const char* v = std::getenv(env.c_str())) raw_paths[key] = v;
    }
    c.paths.registry = resolve(base_dir, raw_paths["registry"]);
    c.paths.stopwords = resolve(base_dir, raw_paths["stopwords"]);
    c.paths.baselines = resolve(base_dir, raw_paths["baselines"]);

    const auto corpus = section("corpus");
    check_keys(corpus, {"base", "dedup"}, "config.corpus");
    c.base_corpus = corpus.value("base", std::string());
    c.dedup = corpus.value("dedup", false);

    const auto norm = section("normalize");
    check_keys(norm, {"repeat_collapse_len", "strip_non_arabic"}, "config.normalize");
    c.normalize.stopword_path = c.paths.stopwords;
    c.normalize.repeat_collapse_len = norm.value("repeat_collapse_len", c.normalize.repeat_collapse_len);
    c.normalize.strip_non_arabic = norm.value("strip_non_arabic", c.normalize.strip_non_arabic);

    const auto encoder = section("encoder");
    check_keys(encoder, {"members"}, "config.encoder");
    for (const auto& m : encoder.value("members", json::array())) {
      check_keys(m, {"backend", "max_sequence_tokens", "epochs", "batch_size", "learning_rate"},
                 "config.encoder.members");
      c.members.push_back(member_from_json(m));
    }

    const auto tune = section("tune");
    check_keys(tune, {"enabled", "folds", "grid"}, "config.tune");
    c.tune_enabled = tune.value("enabled", false);
    c.tune_folds = tune.value("folds", c.tune_folds);
    if (tune.contains("grid")) {
      check_keys(tune["grid"], {"epochs", "batch_size", "learning_rate", "initial"}, "config.tune.grid");
      c.grid = grid_from_json(tune["grid"]);
    }

    const auto ensemble = section("ensemble");
    check_keys(ensemble, {"mode", "weights"}, "config.ensemble");
    c.vote.mode = parse_vote_mode(ensemble.value("mode", std::string("majority")));
    c.vote.weights = ensemble.value("weights", std::vector<double>{});

    const auto augment = section("augment");
    check_keys(augment, {"enabled", "direct_sources", "pseudo_sources", "confidence_threshold"},
               "config.augment");
    c.augment_enabled = augment.value("enabled", false);
    c.direct_sources = augment.value("direct_sources", std::vector<std::string>{});
    c.pseudo_sources = augment.value("pseudo_sources", std::vector<std::string>{});
    c.confidence_threshold = augment.value("confidence_threshold", 0.0);

    const auto evaluate = section("evaluate");
    check_keys(evaluate, {"folds", "jobs"}, "config.evaluate");
    c.folds = evaluate.value("folds", c.folds);
    c.jobs = evaluate.value("jobs", c.jobs);

    c.apply_seed(doc.value("seed", std::uint64_t{0}));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

std::vector<Label> ensemble_predict(const std::vector<std::shared_ptr<const TrainedModel>>& models,
                                    const VoteConfig& vote, const std::vector<std::string>& texts) {
  std::vector<std::string> ids(texts.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
  std::vector<ProbabilityMatrix> matrices;
  for (const auto& m : models) matrices.push_back(predict_proba(*m, ids, texts));
  if (matrices.size() == 1) {
    std::vector<Label> out;
    for (const auto& row : matrices[0].rows) out.push_back(argmax(row));
    return out;
  }
  if (vote.mode == VoteMode::majority) return majority_vote(matrices);
  return average_vote(matrices, vote.weights).labels;
}

ModelRecipe make_recipe(std::vector<ModelMember> members, VoteConfig vote) {
  return [members = std::move(members), vote = std::move(vote)](const Corpus& train) -> Predictor {
    std::vector<std::shared_ptr<const TrainedModel>> models;
    for (const auto& m : members) models.push_back(fit(m.spec, m.hp, train));
    return [models = std::move(models), vote](const std::vector<std::string>& texts) {
      return ensemble_predict(models, vote, texts);
    };
  };
}

Corpus usable_rows(const Corpus& corpus) {
  Corpus out;
  for (const auto& row : corpus) {
    if (row.origin == Origin::gold && row.usable()) out.push_back(row);
  }
  return out;
}

double cross_validated_micro_f1(const Corpus& corpus, const ModelMember& member, std::size_t folds,
                                std::uint64_t seed, std::size_t jobs) {
  const auto plan = stratified_folds(corpus, folds, seed);
  const auto report = cross_validate(corpus, make_recipe({member}, {}), plan, {jobs});
  return report.aggregates.micro_f1;
}

namespace {

/// Input files whose bytes define the run, keyed by role.
std::map<std::string, std::string> input_hashes(const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  out["registry"] = sha256_file(config.paths.registry);
  if (!config.paths.stopwords.empty()) out["stopwords"] = sha256_file(config.paths.stopwords);
  const auto registry = load_registry(config.paths.registry);
  std::set<std::string> keys{config.base_corpus};
  if (config.augment_enabled) {
    keys.insert(config.direct_sources.begin(), config.direct_sources.end());
    keys.insert(config.pseudo_sources.begin(), config.pseudo_sources.end());
  }
  for (const auto& key : keys) out["dataset:" + key] = sha256_file(find_descriptor(registry, key).path);
  return out;
}

json identity_snapshot(const ExperimentConfig& config) {
  // Paths are left out so that a relocated checkout keeps its run ids; the
  // file contents are hashed instead.
  auto snap = config.snapshot();
  snap.erase("paths");
  return snap;
}

std::vector<SourceRows> load_sources(const std::vector<DatasetDescriptor>& registry,
                                     const std::vector<std::string>& keys, const Normalizer& normalizer) {
  std::vector<SourceRows> out;
  for (const auto& key : keys) {
    const auto& d = find_descriptor(registry, key);
    out.push_back({d, normalize_corpus(load_dataset(d).rows, normalizer)});
  }
  return out;
}

class Runner {
 public:
  Runner(const ExperimentConfig& config, fs::path run_dir, std::string run_id,
         std::map<std::string, std::string> hashes)
      : config_(config), dir_(std::move(run_dir)), run_id_(std::move(run_id)), hashes_(std::move(hashes)) {}

  RunSummary run() {
    fs::create_directories(dir_ / "stages");
    fs::remove(dir_ / "failure.json");
    bool force = false;
    for (auto name : kStages) {
      const std::string stage(name);
      if (!enabled(stage)) {
        status_[stage] = "skipped";
        continue;
      }
      if (!force && complete(stage)) {
        status_[stage] = "done";
        artifacts_[stage] = outputs_from_marker(stage);
        continue;
      }
      force = true;
      fs::remove(marker(stage));
      spdlog::info("stage {}: running", stage);
      std::vector<std::string> outputs;
      try {
        outputs = execute(stage);
      } catch (const std::exception& e) {
        status_[stage] = "failed";
        write_json(dir_ / "failure.json",
                   {{"stage", stage},
                    {"error", e.what()},
                    {"kind", dynamic_cast<const ValidationError*>(&e) ? "validation" : "stage"}});
        write_manifest();
        throw;
      }
      write_json(marker(stage), {{"stage", stage}, {"outputs", outputs}});
      status_[stage] = "done";
      artifacts_[stage] = outputs;
      executed_.push_back(stage);
      write_manifest();
    }
    write_manifest();
    return {run_id_, dir_, executed_};
  }

 private:
  bool enabled(const std::string& stage) const {
    if (stage == "tune") return config_.tune_enabled;
    if (stage == "augment") return config_.augment_enabled;
    return true;
  }

  fs::path marker(const std::string& stage) const { return dir_ / "stages" / (stage + ".done"); }

  std::vector<std::string> outputs_from_marker(const std::string& stage) const {
    return read_json_file(marker(stage)).at("outputs").get<std::vector<std::string>>();
  }

  bool complete(const std::string& stage) const {
    if (!fs::exists(marker(stage))) return false;
    try {
      for (const auto& out : outputs_from_marker(stage)) {
        if (!fs::exists(dir_ / out)) return false;
      }
    } catch (const std::exception&) {
      return false;
    }
    return true;
  }

  void write_manifest() const {
    json stages = json::object();
    for (auto name : kStages) {
      const std::string s(name);
      stages[s] = {{"status", status_.contains(s) ? status_.at(s) : "pending"},
                   {"marker", "stages/" + s + ".done"}};
    }
    json backends = json::array();
    for (const auto& m : config_.members) backends.push_back(m.spec.backend_key);
    json dataset_hashes = json::object();
    std::string stopword_hash;
    for (const auto& [k, v] : hashes_) {
      if (k.rfind("dataset:", 0) == 0) dataset_hashes[k.substr(8)] = v;
      if (k == "stopwords") stopword_hash = v;
    }
    json seeds = json::array();
    for (const auto& m : config_.members) seeds.push_back(m.hp.seed);
    write_json(dir_ / "manifest.json",
               {{"run_id", run_id_},
                {"tool_version", kToolVersion},
                {"config", config_.snapshot()},
                {"seed", config_.seed},
                {"member_seeds", seeds},
                {"registry_hash", hashes_.at("registry")},
                {"dataset_hashes", dataset_hashes},
                {"stopword_hash", stopword_hash},
                {"backends", backends},
                {"stages", stages},
                {"artifacts", artifacts_}});
  }

  Normalizer normalizer() const { return Normalizer(config_.normalize); }

  std::vector<ModelMember> trained_members() const {
    if (!config_.tune_enabled) return config_.members;
    std::vector<ModelMember> out;
    for (const auto& m : read_json_file(dir_ / "tune" / "members.json")) out.push_back(member_from_json(m));
    return out;
  }

  std::vector<std::string> execute(const std::string& stage) {
    if (stage == "ingest") return ingest();
    if (stage == "normalize") return normalize();
    if (stage == "tune") return tune();
    if (stage == "train") return train();
    if (stage == "augment") return augment();
    if (stage == "evaluate") return evaluate();
    return report();
  }

  std::vector<std::string> ingest() {
    const auto registry = load_registry(config_.paths.registry);
    auto loaded = load_dataset(find_descriptor(registry, config_.base_corpus));
    write_corpus_jsonl(dir_ / "ingested.jsonl", loaded.rows);
    write_json(dir_ / "stats.json", stats_to_json(compute_stats(loaded.rows)));
    return {"ingested.jsonl", "stats.json"};
  }

  std::vector<std::string> normalize() {
    auto corpus = normalize_corpus(read_corpus_jsonl(dir_ / "ingested.jsonl"), normalizer());
    if (config_.dedup) {
      std::unordered_set<std::string> seen;
      Corpus kept;
      for (auto& row : corpus) {
        if (row.norm_text.empty() || seen.insert(row.norm_text).second) kept.push_back(std::move(row));
      }
      corpus = std::move(kept);
    }
    write_corpus_jsonl(dir_ / "normalized.jsonl", corpus);
    return {"normalized.jsonl"};
  }

  std::vector<std::string> tune() {
    const auto corpus = usable_rows(read_corpus_jsonl(dir_ / "normalized.jsonl"));
    std::vector<std::string> outputs;
    json members = json::array();
    for (std::size_t i = 0; i < config_.members.size(); ++i) {
      auto member = config_.members[i];
      const auto name = member_name(i, member);
      auto grid = config_.grid;
      grid.initial.seed = member.hp.seed;
      const auto result = coordinate_search(grid, [&](const HyperParams& hp) {
        ModelMember candidate{member.spec, hp};
        candidate.hp.seed = member.hp.seed;
        return cross_validated_micro_f1(corpus, candidate, config_.tune_folds, config_.seed, config_.jobs);
      });
      const auto trace = "tune/" + name + "/trace.csv";
      const auto tables = "tune/" + name + "/stage_tables.csv";
      fs::create_directories(dir_ / "tune" / name);
      write_trace_csv(dir_ / trace, result.trace);
      write_stage_tables_csv(dir_ / tables, name, grid, result.trace);
      outputs.push_back(trace);
      outputs.push_back(tables);
      member.hp.epochs = result.best.epochs;
      member.hp.batch_size = result.best.batch_size;
      member.hp.learning_rate = result.best.learning_rate;
      auto j = member_to_json(member);
      j["cv_micro_f1"] = result.best_score;
      members.push_back(j);
    }
    write_json(dir_ / "tune" / "members.json", members);
    outputs.push_back("tune/members.json");
    return outputs;
  }

  std::vector<std::string> train() {
    const auto corpus = usable_rows(read_corpus_jsonl(dir_ / "normalized.jsonl"));
    const auto members = trained_members();
    std::vector<std::string> outputs;
    json entries = json::array();
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto name = member_name(i, members[i]);
      const auto model = fit(members[i].spec, members[i].hp, corpus);
      model->save(dir_ / "models" / name);
      auto j = member_to_json(members[i]);
      j["dir"] = name;
      j["fingerprint"] = model->info().fingerprint;
      entries.push_back(j);
      outputs.push_back("models/" + name + "/manifest.txt");
    }
    write_json(dir_ / "models" / "ensemble.json",
               {{"members", entries}, {"mode", to_string(config_.vote.mode)}, {"weights", config_.vote.weights}});
    outputs.push_back("models/ensemble.json");
    return outputs;
  }

  std::vector<std::shared_ptr<const TrainedModel>> load_models() const {
    std::vector<std::shared_ptr<const TrainedModel>> out;
    const auto doc = read_json_file(dir_ / "models" / "ensemble.json");
    for (const auto& e : doc.at("members")) {
      out.push_back(load_model(dir_ / "models" / e.at("dir").get<std::string>()));
    }
    return out;
  }

  std::vector<std::string> augment() {
    const auto base = read_corpus_jsonl(dir_ / "normalized.jsonl");
    const auto registry = load_registry(config_.paths.registry);
    const auto norm = normalizer();
    std::vector<std::string> keys = config_.direct_sources;
    keys.insert(keys.end(), config_.pseudo_sources.begin(), config_.pseudo_sources.end());
    const auto sources = load_sources(registry, keys, norm);
    auto plan = config_.augment_plan();
    plan.labeler.members = trained_members();
    const Labeler labeler(load_models(), config_.vote);

    std::vector<std::string> outputs;
    for (const auto& src : sources) {
      if (std::find(config_.pseudo_sources.begin(), config_.pseudo_sources.end(), src.descriptor.key) ==
          config_.pseudo_sources.end()) {
        continue;
      }
      std::vector<std::string> ids, texts;
      for (const auto& row : src.rows) {
        ids.push_back(row.id);
        texts.push_back(row.norm_text);
      }
      const auto probs = labeler.member_probabilities(ids, texts);
      for (std::size_t m = 0; m < probs.size(); ++m) {
        const auto rel = "caches/" + src.descriptor.key + "." + std::to_string(m) + ".csv";
        fs::create_directories(dir_ / "caches");
        write_probability_csv(dir_ / rel, probs[m]);
        outputs.push_back(rel);
      }
    }

    const auto [corpus, report] = build_augmented_corpus(base, plan, sources, labeler);
    if (!report.reconciles()) throw StageError("augmentation tallies do not reconcile");
    write_corpus_jsonl(dir_ / "augmented.jsonl", corpus);
    write_json(dir_ / "augment_report.json", to_json(report));
    outputs.push_back("augmented.jsonl");
    outputs.push_back("augment_report.json");
    return outputs;
  }

  std::vector<std::string> evaluate() {
    const auto corpus =
        read_corpus_jsonl(dir_ / (config_.augment_enabled ? "augmented.jsonl" : "normalized.jsonl"));
    const auto plan = stratified_folds(corpus, config_.folds, config_.seed);
    write_fold_csv(dir_ / "folds.csv", plan);
    auto report = cross_validate(corpus, make_recipe(trained_members(), config_.vote), plan, {config_.jobs});
    report.config_hash = sha256_hex(identity_snapshot(config_).dump());
    write_json(dir_ / "metrics.json", to_json(report));
    return {"folds.csv", "metrics.json"};
  }

  std::vector<std::string> report() {
    BaselineTable baselines;
    if (!config_.paths.baselines.empty()) baselines = load_baselines(config_.paths.baselines);
    const std::vector<fs::path> runs{dir_};
    write_text(dir_ / "report.md", render(runs, baselines, ReportFormat::markdown));
    return {"report.md"};
  }

  const ExperimentConfig& config_;
  fs::path dir_;
  std::string run_id_;
  std::map<std::string, std::string> hashes_;
  std::map<std::string, std::string> status_;
  std::map<std::string, std::vector<std::string>> artifacts_;
  std::vector<std::string> executed_;
};

}  // namespace

std::string compute_run_id(const ExperimentConfig& config) {
  json identity = {{"config", identity_snapshot(config)}, {"inputs", input_hashes(config)}};
  return "run-" + sha256_hex(identity.dump()).substr(0, 12);
}

RunSummary run_experiment(const ExperimentConfig& config, const fs::path& out_root) {
  config.validate();
  // Backends are checked before anything is written.
  for (const auto& m : config.members) BackendRegistry::instance().at(m.spec.backend_key)->check_available();
  const auto hashes = input_hashes(config);
  const json identity = {{"config", identity_snapshot(config)}, {"inputs", hashes}};
  const auto run_id = "run-" + sha256_hex(identity.dump()).substr(0, 12);
  Runner runner(config, out_root / run_id, run_id, hashes);
  return runner.run();
}

}  // namespace arhate
