#include "arhate/encoder.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "arhate/hashing.hpp"
#include "arhate/toy_encoder.hpp"

namespace arhate {

void HyperParams::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be a positive finite number");
  }
}

const std::string& ModelManifest::at(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw ValidationError("model manifest lacks key '" + key + "'");
  return it->second;
}

ModelManifest ModelManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model manifest " + path.string());
  ModelManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key=value");
    m.entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

void ModelManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
}

ModelManifest TrainedModel::base_manifest() const {
  ModelManifest m;
  m.entries["format"] = "arhate-model/1";
  m.entries["backend"] = info_.spec.backend_key;
  m.entries["max_sequence_tokens"] = std::to_string(info_.spec.max_sequence_tokens);
  m.entries["epochs"] = std::to_string(info_.hp.epochs);
  m.entries["batch_size"] = std::to_string(info_.hp.batch_size);
  m.entries["learning_rate"] = format_double(info_.hp.learning_rate);
  m.entries["seed"] = std::to_string(info_.hp.seed);
  m.entries["fingerprint"] = info_.fingerprint;
  return m;
}

namespace {

/// Slot for a pretrained encoder whose runtime is supplied by the
/// deployment. Weights are looked up under $ARHATE_PRETRAINED_HOME/<key>.
class PretrainedSlot final : public Backend {
 public:
  explicit PretrainedSlot(std::string key) : key_(std::move(key)) {}

  std::string key() const override { return key_; }
  std::size_t max_sequence_limit() const override { return 512; }

  void check_available() const override {
    const char* home = std::getenv("ARHATE_PRETRAINED_HOME");
    if (home == nullptr || *home == '\0') {
      throw BackendUnavailable(BackendUnavailable::Reason::not_installed,
                               "backend '" + key_ + "' is not installed (ARHATE_PRETRAINED_HOME unset)");
    }
    const auto dir = std::filesystem::path(home) / key_;
    if (!std::filesystem::is_directory(dir)) {
      throw BackendUnavailable(BackendUnavailable::Reason::download_failed,
                               "weights for '" + key_ + "' missing at " + dir.string() +
                                   " (download failed or incomplete)");
    }
    throw BackendUnavailable(BackendUnavailable::Reason::not_installed,
                             "no transformer runtime is linked for backend '" + key_ + "'");
  }

  std::unique_ptr<TrainedModel> train(const ModelInfo&, std::span<const LabeledText>) const override {
    check_available();
    return nullptr;
  }

  std::unique_ptr<TrainedModel> load(const std::filesystem::path&,
                                     const ModelManifest&) const override {
    check_available();
    return nullptr;
  }

 private:
  std::string key_;
};

}  // namespace

BackendRegistry::BackendRegistry() {
  backends_["toy"] = std::make_shared<toy::ToyBackend>();
  for (auto key : kPretrainedBackends) {
    backends_[std::string(key)] = std::make_shared<PretrainedSlot>(std::string(key));
  }
}

BackendRegistry& BackendRegistry::instance() {
  static BackendRegistry registry;
  return registry;
}

void BackendRegistry::add(std::shared_ptr<const Backend> backend) {
  std::lock_guard lock(mutex_);
  backends_[backend->key()] = std::move(backend);
}

bool BackendRegistry::contains(const std::string& key) const {
  std::lock_guard lock(mutex_);
  return backends_.contains(key);
}

std::shared_ptr<const Backend> BackendRegistry::at(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = backends_.find(key);
  if (it == backends_.end()) throw ValidationError("unknown backend '" + key + "'");
  return it->second;
}

std::vector<std::string> BackendRegistry::keys() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [k, _] : backends_) out.push_back(k);
  return out;
}

void validate_member(const ModelMember& member) {
  const auto backend = BackendRegistry::instance().at(member.spec.backend_key);
  member.hp.validate();
  if (member.spec.max_sequence_tokens < 1) throw ValidationError("max_sequence_tokens must be >= 1");
  if (member.spec.max_sequence_tokens > backend->max_sequence_limit()) {
    throw ValidationError("max_sequence_tokens exceeds the limit of backend '" +
                          member.spec.backend_key + "'");
  }
}

std::string training_fingerprint(const EncoderSpec& spec, const HyperParams& hp,
                                 std::span<const LabeledText> rows) {
  Sha256 h;
  h.update("backend=" + spec.backend_key + "\n");
  h.update("max_sequence_tokens=" + std::to_string(spec.max_sequence_tokens) + "\n");
  h.update("epochs=" + std::to_string(hp.epochs) + "\n");
  h.update("batch_size=" + std::to_string(hp.batch_size) + "\n");
  h.update("learning_rate=" + format_double(hp.learning_rate) + "\n");
  h.update("seed=" + std::to_string(hp.seed) + "\n");
  for (const auto& row : rows) {
    h.update(row.id);
    h.update("\n");
  }
  return h.hex_digest();
}

std::unique_ptr<TrainedModel> fit(const EncoderSpec& spec, const HyperParams& hp,
                                  std::span<const LabeledText> rows) {
  hp.validate();
  const auto backend = BackendRegistry::instance().at(spec.backend_key);
  EncoderSpec effective = spec;
  effective.max_sequence_tokens =
      std::min(std::max<std::size_t>(spec.max_sequence_tokens, 1), backend->max_sequence_limit());

  if (rows.empty()) throw ValidationError("training set is empty");
  std::set<Label> classes;
  for (const auto& row : rows) {
    if (!row.normalized || row.norm_text.empty()) {
      throw ValidationError("training row '" + row.id + "' is not normalized or is empty");
    }
    classes.insert(row.label);
  }
  if (classes.size() < 2) {
    throw ValidationError("training set must span at least two classes (only " +
                          std::string(to_string(*classes.begin())) + " present)");
  }
  backend->check_available();
  ModelInfo info{effective, hp, training_fingerprint(effective, hp, rows)};
  return backend->train(info, rows);
}

ProbabilityMatrix predict_proba(const TrainedModel& model, std::vector<std::string> ids,
                                std::span<const std::string> texts) {
  if (ids.size() != texts.size()) throw ValidationError("predict_proba: ids/texts size mismatch");
  ProbabilityMatrix m;
  m.ids = std::move(ids);
  m.rows = model.predict(texts);
  return m;
}

std::unique_ptr<TrainedModel> load_model(const std::filesystem::path& dir) {
  const auto manifest = ModelManifest::read(dir / "manifest.txt");
  if (manifest.at("format") != "arhate-model/1") {
    throw ValidationError("unsupported model format in " + dir.string());
  }
  const auto backend = BackendRegistry::instance().at(manifest.at("backend"));
  backend->check_available();
  return backend->load(dir, manifest);
}

}  // namespace arhate
