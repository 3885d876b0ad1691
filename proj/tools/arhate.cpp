// Command-line front end. Exit codes: 0 ok, 1 validation error, 2 stage failure.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <optional>

#include "arhate/augment.hpp"
#include "arhate/hashing.hpp"
#include "arhate/pipeline.hpp"
#include "arhate/report.hpp"
#include "arhate/synthetic.hpp"

namespace fs = std::filesystem;
using namespace arhate;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "Experiment config supplying defaults")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Random seed");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

std::optional<ExperimentConfig> load_config(const Common& c) {
  if (c.config.empty()) return std::nullopt;
  auto cfg = load_experiment_config(c.config);
  if (c.seed) cfg.apply_seed(*c.seed);
  return cfg;
}

std::uint64_t seed_of(const Common& c, const std::optional<ExperimentConfig>& cfg) {
  if (c.seed) return *c.seed;
  return cfg ? cfg->seed : 0;
}

/// Member from --backend and an --hp JSON file, else the config's first member.
ModelMember member_of(const std::string& backend, const std::string& hp_path,
                      const std::optional<ExperimentConfig>& cfg, std::uint64_t seed) {
  if (backend.empty()) {
    if (!cfg || cfg->members.empty()) throw ValidationError("--backend or --config is required");
    return cfg->members.front();
  }
  json j = json::object();
  if (!hp_path.empty()) {
    std::ifstream in(hp_path);
    if (!in) throw ValidationError("cannot open " + hp_path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError(hp_path + ": " + e.what());
    }
  }
  j["backend"] = backend;
  ModelMember m;
  try {
    m = member_from_json(j);
  } catch (const json::exception& e) {
    throw ValidationError(hp_path + ": " + e.what());
  }
  m.hp.seed = seed;
  validate_member(m);
  return m;
}

Normalizer make_normalizer(const std::string& stopwords, bool keep_non_arabic,
                           std::optional<std::size_t> collapse,
                           const std::optional<ExperimentConfig>& cfg) {
  NormalizationConfig nc = cfg ? cfg->normalize : NormalizationConfig{};
  if (!stopwords.empty()) nc.stopword_path = stopwords;
  if (keep_non_arabic) nc.strip_non_arabic = false;
  if (collapse) nc.repeat_collapse_len = *collapse;
  nc.validate();
  return Normalizer(nc);
}

/// Rows without norm_text are normalized on the way in.
Corpus read_normalized(const std::string& path, const Normalizer& normalizer) {
  auto corpus = read_corpus_jsonl(path);
  bool all = true;
  for (const auto& r : corpus) all = all && r.normalized;
  return all ? corpus : normalize_corpus(std::move(corpus), normalizer);
}

void write_json_file(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<SourceRows> load_plan_sources(const fs::path& registry_path, const AugmentPlan& plan,
                                          const Normalizer& normalizer) {
  const auto registry = load_registry(registry_path);
  std::vector<SourceRows> out;
  std::vector<std::string> keys = plan.direct_sources;
  keys.insert(keys.end(), plan.pseudo_sources.begin(), plan.pseudo_sources.end());
  for (const auto& key : keys) {
    const auto& d = find_descriptor(registry, key);
    out.push_back({d, normalize_corpus(load_dataset(d).rows, normalizer)});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arabic hate-speech classification experiments"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // normalize
  Common norm_c;
  std::string norm_in, norm_stop;
  bool norm_keep = false;
  std::optional<std::size_t> norm_collapse;
  auto* norm = app.add_subcommand("normalize", "Normalize a corpus JSONL file");
  add_common(norm, norm_c);
  norm->add_option("--in", norm_in, "Input corpus (id, text, label, source)")->required()->check(CLI::ExistingFile);
  norm->add_option("--stopwords", norm_stop, "Stopword list, one per line");
  norm->add_flag("--keep-non-arabic", norm_keep, "Keep characters outside the Arabic block");
  norm->add_option("--collapse", norm_collapse, "Maximum run length of a repeated character");

  // split
  Common split_c;
  std::string split_data;
  std::size_t split_folds = 10;
  auto* split = app.add_subcommand("split", "Assign stratified folds");
  add_common(split, split_c);
  split->add_option("--data", split_data, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  split->add_option("--folds", split_folds, "Number of folds");

  // train
  Common train_c;
  std::string train_data, train_backend, train_hp;
  auto* train = app.add_subcommand("train", "Train one model and save it");
  add_common(train, train_c);
  train->add_option("--data", train_data, "Training corpus JSONL")->required()->check(CLI::ExistingFile);
  train->add_option("--backend", train_backend, "Backend key");
  train->add_option("--hp", train_hp, "Hyperparameter JSON")->check(CLI::ExistingFile);

  // tune
  Common tune_c;
  std::string tune_data, tune_backend, tune_grid;
  std::size_t tune_folds = 10, tune_jobs = 1;
  auto* tune = app.add_subcommand("tune", "Coordinate-wise hyperparameter search");
  add_common(tune, tune_c);
  tune->add_option("--data", tune_data, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  tune->add_option("--backend", tune_backend, "Backend key");
  tune->add_option("--grid", tune_grid, "Grid JSON")->check(CLI::ExistingFile);
  tune->add_option("--folds", tune_folds, "Cross-validation folds per point");
  tune->add_option("--jobs", tune_jobs, "Folds trained in parallel");

  // predict
  Common pred_c;
  std::string pred_model, pred_data, pred_labels;
  auto* pred = app.add_subcommand("predict", "Write class probabilities for a corpus");
  add_common(pred, pred_c);
  pred->add_option("--model", pred_model, "Model directory")->required()->check(CLI::ExistingDirectory);
  pred->add_option("--data", pred_data, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  pred->add_option("--labels", pred_labels, "Also write argmax labels here");

  // vote
  Common vote_c;
  std::string vote_mode = "majority", vote_labels;
  std::vector<std::string> vote_caches;
  std::vector<double> vote_weights;
  auto* vote = app.add_subcommand("vote", "Combine probability caches");
  add_common(vote, vote_c);
  vote->add_option("--mode", vote_mode, "majority or average")->check(CLI::IsMember({"majority", "average"}));
  vote->add_option("--caches", vote_caches, "Probability CSVs")->required()->check(CLI::ExistingFile);
  vote->add_option("--weights", vote_weights, "Per-model weights (average mode)");
  vote->add_option("--labels", vote_labels, "Also write voted labels here");

  // augment
  Common aug_c;
  std::string aug_base, aug_plan, aug_report, aug_stop;
  auto* aug = app.add_subcommand("augment", "Direct-merge and pseudo-label external sources");
  add_common(aug, aug_c);
  aug->add_option("--base", aug_base, "Base corpus JSONL")->required()->check(CLI::ExistingFile);
  aug->add_option("--plan", aug_plan, "Augmentation plan JSON")->required()->check(CLI::ExistingFile);
  aug->add_option("--report", aug_report, "Augmentation report JSON")->required();
  aug->add_option("--stopwords", aug_stop, "Stopword list for the sources");

  // evaluate
  Common eval_c;
  std::string eval_data, eval_backend, eval_hp, eval_plan;
  std::size_t eval_folds = 10, eval_jobs = 1;
  auto* eval = app.add_subcommand("evaluate", "Stratified k-fold evaluation");
  add_common(eval, eval_c);
  eval->add_option("--data", eval_data, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--backend", eval_backend, "Backend key (default: the config's ensemble)");
  eval->add_option("--hp", eval_hp, "Hyperparameter JSON")->check(CLI::ExistingFile);
  eval->add_option("--augment-plan", eval_plan, "Augment before evaluating")->check(CLI::ExistingFile);
  eval->add_option("--folds", eval_folds, "Number of folds");
  eval->add_option("--jobs", eval_jobs, "Folds trained in parallel");

  // report
  Common rep_c;
  std::vector<std::string> rep_runs;
  std::string rep_baselines, rep_format = "markdown";
  auto* rep = app.add_subcommand("report", "Render comparison tables");
  add_common(rep, rep_c);
  rep->add_option("--runs", rep_runs, "Run directories")->check(CLI::ExistingDirectory);
  rep->add_option("--baselines", rep_baselines, "Reference rows JSON")->check(CLI::ExistingFile);
  rep->add_option("--format", rep_format, "markdown or csv")->check(CLI::IsMember({"markdown", "csv"}));

  // run
  Common run_c;
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  add_common(run, run_c, false);
  run->get_option("--config")->required();

  // synth
  Common syn_c;
  bool syn_aug = false;
  auto* syn = app.add_subcommand("synth", "Write a separable synthetic workspace for desk runs");
  add_common(syn, syn_c);
  syn->add_flag("--augment", syn_aug, "Enable augmentation in the generated config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  spdlog::set_pattern("%l: %v");

  try {
    if (*norm) {
      const auto cfg = load_config(norm_c);
      const auto n = make_normalizer(norm_stop, norm_keep, norm_collapse, cfg);
      write_corpus_jsonl(norm_c.out, normalize_corpus(read_corpus_jsonl(norm_in), n));
    } else if (*split) {
      const auto cfg = load_config(split_c);
      const auto plan = stratified_folds(read_corpus_jsonl(split_data), split_folds, seed_of(split_c, cfg));
      write_fold_csv(split_c.out, plan);
    } else if (*train) {
      const auto cfg = load_config(train_c);
      const auto n = make_normalizer("", false, std::nullopt, cfg);
      const auto member = member_of(train_backend, train_hp, cfg, seed_of(train_c, cfg));
      const auto corpus = usable_rows(read_normalized(train_data, n));
      fit(member.spec, member.hp, corpus)->save(train_c.out);
    } else if (*tune) {
      const auto cfg = load_config(tune_c);
      const auto n = make_normalizer("", false, std::nullopt, cfg);
      const auto seed = seed_of(tune_c, cfg);
      const auto member = member_of(tune_backend, "", cfg, seed);
      SearchGrid grid = tune_grid.empty() ? (cfg ? cfg->grid : SearchGrid{}) : load_grid(tune_grid);
      grid.initial.seed = seed;
      const auto corpus = usable_rows(read_normalized(tune_data, n));
      const auto result = coordinate_search(grid, [&](const HyperParams& hp) {
        ModelMember candidate{member.spec, hp};
        return cross_validated_micro_f1(corpus, candidate, tune_folds, seed, tune_jobs);
      });
      const fs::path dir = tune_c.out;
      fs::create_directories(dir);
      write_trace_csv(dir / "trace.csv", result.trace);
      write_stage_tables_csv(dir / "stage_tables.csv", member.spec.backend_key, grid, result.trace);
      auto best = member_to_json({member.spec, result.best});
      best["cv_micro_f1"] = result.best_score;
      write_json_file(dir / "best.json", best);
    } else if (*pred) {
      const auto cfg = load_config(pred_c);
      const auto n = make_normalizer("", false, std::nullopt, cfg);
      const auto corpus = read_normalized(pred_data, n);
      const auto model = load_model(pred_model);
      std::vector<std::string> ids, texts;
      for (const auto& r : corpus) {
        ids.push_back(r.id);
        texts.push_back(r.norm_text);
      }
      const auto m = predict_proba(*model, ids, texts);
      write_probability_csv(pred_c.out, m);
      if (!pred_labels.empty()) {
        std::vector<Label> labels;
        for (const auto& row : m.rows) labels.push_back(argmax(row));
        write_labels_csv(pred_labels, m.ids, labels);
      }
    } else if (*vote) {
      load_config(vote_c);
      std::vector<ProbabilityMatrix> matrices;
      for (const auto& c : vote_caches) matrices.push_back(read_probability_csv(c));
      VoteConfig vc{parse_vote_mode(vote_mode), vote_weights};
      vc.validate(matrices.size());
      std::vector<Label> labels;
      if (vc.mode == VoteMode::majority) {
        labels = majority_vote(matrices);
        write_probability_csv(vote_c.out, vote_shares(matrices));
      } else {
        auto avg = average_vote(matrices, vc.weights);
        labels = avg.labels;
        write_probability_csv(vote_c.out, avg.combined);
      }
      if (!vote_labels.empty()) write_labels_csv(vote_labels, matrices.front().ids, labels);
    } else if (*aug) {
      const auto cfg = load_config(aug_c);
      const auto n = make_normalizer(aug_stop, false, std::nullopt, cfg);
      auto [plan, registry] = load_augment_plan(aug_plan);
      if (aug_c.seed) {
        for (std::size_t i = 0; i < plan.labeler.members.size(); ++i) plan.labeler.members[i].hp.seed = *aug_c.seed + i;
      }
      const auto base = read_normalized(aug_base, n);
      const auto sources = load_plan_sources(registry, plan, n);
      const auto [corpus, report] = build_augmented_corpus(base, plan, sources);
      write_corpus_jsonl(aug_c.out, corpus);
      write_json_file(aug_report, to_json(report));
    } else if (*eval) {
      const auto cfg = load_config(eval_c);
      const auto n = make_normalizer("", false, std::nullopt, cfg);
      const auto seed = seed_of(eval_c, cfg);
      std::vector<ModelMember> members;
      VoteConfig vc;
      if (eval_backend.empty() && cfg) {
        members = cfg->members;
        vc = cfg->vote;
      } else {
        members.push_back(member_of(eval_backend, eval_hp, cfg, seed));
      }
      auto corpus = read_normalized(eval_data, n);
      const fs::path dir = eval_c.out;
      fs::create_directories(dir);
      if (!eval_plan.empty()) {
        auto [plan, registry] = load_augment_plan(eval_plan);
        const auto sources = load_plan_sources(registry, plan, n);
        auto [augmented, report] = build_augmented_corpus(corpus, plan, sources);
        corpus = std::move(augmented);
        write_corpus_jsonl(dir / "augmented.jsonl", corpus);
        write_json_file(dir / "augment_report.json", to_json(report));
      }
      const auto plan = stratified_folds(corpus, eval_folds, seed);
      write_fold_csv(dir / "folds.csv", plan);
      auto report = cross_validate(corpus, make_recipe(members, vc), plan, {eval_jobs});
      json identity = json::array();
      for (const auto& m : members) identity.push_back(member_to_json(m));
      report.config_hash = sha256_hex(json{{"members", identity}, {"mode", to_string(vc.mode)},
                                           {"folds", eval_folds}, {"seed", seed}}
                                          .dump());
      write_json_file(dir / "metrics.json", to_json(report));
    } else if (*rep) {
      const auto cfg = load_config(rep_c);
      BaselineTable baselines;
      fs::path bpath = rep_baselines;
      if (bpath.empty() && cfg) bpath = cfg->paths.baselines;
      if (!bpath.empty()) baselines = load_baselines(bpath);
      std::vector<fs::path> runs(rep_runs.begin(), rep_runs.end());
      const auto doc = render(runs, baselines, parse_report_format(rep_format));
      std::ofstream out(rep_c.out, std::ios::binary);
      if (!out) throw StageError("cannot write " + rep_c.out);
      out << doc;
    } else if (*run) {
      auto cfg = load_experiment_config(run_c.config);
      if (run_c.seed) cfg.apply_seed(*run_c.seed);
      const auto summary = run_experiment(cfg, run_c.out.empty() ? fs::path("runs") : fs::path(run_c.out));
      std::cout << summary.run_dir.string() << '\n';
    } else if (*syn) {
      const auto spec = synthetic::desk_spec(syn_c.seed.value_or(1));
      std::cout << synthetic::write_workspace(syn_c.out, spec, syn_aug).string() << '\n';
    }
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
