#include "tempo/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tempo/common/error.hpp"
#include "tempo/common/log.hpp"

namespace tempo::cli {

using json = nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config key '" + display() + "' must be an object");
  }
  ~Section() = default;

  bool has(const char* key) {
    known_.push_back(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  void read(const char* key, T& dst) {
    if (!has(key)) return;
    dst = as<T>(j_.at(key), key);
  }

  template <typename T>
  T required(const char* key) {
    if (!has(key)) throw ConfigError("missing required config key '" + qualified(key) + "'");
    return as<T>(j_.at(key), key);
  }

  const json& raw(const char* key) const { return j_.at(key); }
  std::string qualified(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Warns about keys that were never asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::ranges::find(known_, key) != known_.end()) continue;
      log_warn("unknown config key '{}' (did you mean '{}'?)", path_.empty() ? key : path_ + "." + key,
               nearest_key(key, known_));
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  template <typename T>
  T as(const json& v, const char* key) const {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + qualified(key) + "' has an invalid value: " + v.dump());
    }
  }

  const json& j_;
  std::string path_;
  std::vector<std::string> known_;
};

signal::SpectralComponent parse_component(const json& j, const std::string& path) {
  Section s(j, path);
  signal::SpectralComponent c;
  c.center_hz = s.required<double>("center_hz");
  s.read("bandwidth_hz", c.bandwidth_hz);
  s.read("amplitude", c.amplitude);
  s.finish();
  return c;
}

void parse_train(const json& j, const std::string& path, train::TrainConfig& t) {
  Section s(j, path);
  s.read("batch_size", t.batch_size);
  s.read("max_epochs", t.max_epochs);
  s.read("patience_epochs", t.patience_epochs);
  s.read("lr", t.lr);
  s.read("beta1", t.beta1);
  s.read("beta2", t.beta2);
  s.finish();
}

void parse_synthetic(const json& j, DatasetSpec& d) {
  Section s(j, "dataset.synthetic");
  auto& c = d.synthetic;
  c.n_states = 4;
  s.read("n_states", c.n_states);
  if (c.n_states == 0) throw ConfigError("dataset.synthetic.n_states must be positive");
  s.read("rate_hz", c.rate_hz);
  s.read("channels", c.channels);
  s.read("noise_std", c.noise_std);
  s.read("block_s", c.block_s);
  double dwell_s = 120.0;
  s.read("dwell_s", dwell_s);
  if (s.has("transition")) {
    c.transition = s.required<std::vector<std::vector<double>>>("transition");
  } else {
    // Symmetric chain: stay with probability 1 - block/dwell, otherwise move uniformly.
    if (dwell_s <= 0.0) throw ConfigError("dataset.synthetic needs 'transition' or a positive 'dwell_s'");
    if (dwell_s < c.block_s) throw ConfigError("dataset.synthetic.dwell_s must be at least block_s");
    const double stay = 1.0 - c.block_s / dwell_s;
    const double move = c.n_states > 1 ? (1.0 - stay) / static_cast<double>(c.n_states - 1) : 0.0;
    c.transition.assign(c.n_states, std::vector<double>(c.n_states, move));
    for (std::size_t i = 0; i < c.n_states; ++i) c.transition[i][i] = c.n_states > 1 ? stay : 1.0;
  }
  c.state_spectra.clear();
  if (!s.has("state_spectra")) {
    // One 1-Hz-wide peak per state at 4, 8, 12, ... Hz.
    for (std::size_t i = 0; i < c.n_states; ++i) c.state_spectra.push_back({{4.0 * static_cast<double>(i + 1), 1.0, 1.0}});
  }
  const auto& spectra = s.has("state_spectra") ? s.raw("state_spectra") : json::array();
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    std::vector<signal::SpectralComponent> comps;
    for (std::size_t k = 0; k < spectra[i].size(); ++k) {
      comps.push_back(parse_component(spectra[i][k], "dataset.synthetic.state_spectra[" + std::to_string(i) + "]"));
    }
    c.state_spectra.push_back(std::move(comps));
  }
  if (s.has("slow_components")) {
    for (const auto& sj : s.raw("slow_components")) {
      Section ss(sj, "dataset.synthetic.slow_components");
      signal::SlowComponent sc;
      sc.band.center_hz = ss.required<double>("center_hz");
      ss.read("bandwidth_hz", sc.band.bandwidth_hz);
      ss.read("amplitude", sc.band.amplitude);
      ss.read("timescale_s", sc.timescale_s);
      ss.read("modulation", sc.modulation);
      ss.finish();
      c.slow_components.push_back(sc);
    }
  }
  if (!s.has("subjects")) throw ConfigError("missing required config key 'dataset.synthetic.subjects'");
  for (const auto& sj : s.raw("subjects")) {
    Section ss(sj, "dataset.synthetic.subjects");
    SyntheticSubject sub;
    sub.id = ss.required<std::string>("id");
    sub.seed = ss.required<std::uint64_t>("seed");
    ss.read("hours", sub.hours);
    if (ss.has("age")) sub.age_years = ss.required<double>("age");
    ss.finish();
    d.subjects.push_back(std::move(sub));
  }
  s.finish();
}

void parse_dataset(const json& j, DatasetSpec& d) {
  Section s(j, "dataset");
  const auto kind = s.required<std::string>("kind");
  if (kind == "synthetic") {
    d.kind = DatasetSpec::Kind::Synthetic;
    if (!s.has("synthetic")) throw ConfigError("missing required config key 'dataset.synthetic'");
    parse_synthetic(s.raw("synthetic"), d);
  } else if (kind == "edf") {
    d.kind = DatasetSpec::Kind::Edf;
    if (!s.has("edf")) throw ConfigError("missing required config key 'dataset.edf'");
    Section e(s.raw("edf"), "dataset.edf");
    d.edf.directory = e.required<std::string>("directory");
    e.read("pattern", d.edf.pattern);
    e.read("sidecar", d.edf.sidecar);
    std::string scheme = "aasm";
    e.read("label_scheme", scheme);
    const auto parsed = signal::scheme_from_name(scheme);
    if (!parsed) throw ConfigError("config key 'dataset.edf.label_scheme' must be 'rk' or 'aasm', got '" + scheme + "'");
    d.edf.scheme = *parsed;
    e.read("ages", d.edf.ages);
    e.finish();
  } else {
    throw ConfigError("config key 'dataset.kind' must be 'synthetic' or 'edf', got '" + kind + "'");
  }
  s.finish();
}

std::optional<std::size_t> parse_budget(const json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    std::ranges::transform(s, s.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (s == "ALL") return std::nullopt;
  } else if (v.is_number_integer() && v.get<long long>() > 0) {
    return v.get<std::size_t>();
  }
  throw ConfigError("config key 'experiments.budgets' entries must be positive integers or \"ALL\", got " + v.dump());
}

void set_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &root;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    node = &next;
  }
  (*node)[parts.back()] = value;
  log_info("override {} = {}", key, value.dump());
}

ExperimentConfig parse_json(const json& root) {
  ExperimentConfig cfg;
  Section s(root, "");
  s.read("run_name", cfg.run_name);
  std::string out = cfg.output_dir.string();
  s.read("output_dir", out);
  cfg.output_dir = out;
  s.read("seed", cfg.seed);
  s.read("window_s", cfg.window_s);

  if (!s.has("dataset")) throw ConfigError("missing required config key 'dataset'");
  parse_dataset(s.raw("dataset"), cfg.dataset);

  if (s.has("preprocess")) {
    Section p(s.raw("preprocess"), "preprocess");
    p.read("cutoff_hz", cfg.preprocess.cutoff_hz);
    p.read("target_rate_hz", cfg.preprocess.target_rate_hz);
    p.read("channels", cfg.preprocess.keep_channels);
    p.read("filter_order", cfg.preprocess.filter_order);
    p.read("window_s", cfg.window_s);
    p.finish();
  }
  if (s.has("sampler")) {
    Section p(s.raw("sampler"), "sampler");
    p.read("tau_pos_s", cfg.sampler.tau_pos_s);
    p.read("tau_neg_s", cfg.sampler.tau_neg_s);
    p.read("n_anchors", cfg.sampler.n_anchors_per_recording);
    p.read("n_pos", cfg.sampler.n_pos_per_anchor);
    p.read("n_neg", cfg.sampler.n_neg_per_anchor);
    p.read("ts_negatives_from_negative_context", cfg.sampler.ts_negatives_from_negative_context);
    p.finish();
  }
  if (s.has("model")) {
    Section p(s.raw("model"), "model");
    p.read("kernel", cfg.model.kernel);
    p.read("pool", cfg.model.pool);
    p.read("embed_dim", cfg.model.embed_dim);
    p.read("dropout", cfg.model.dropout);
    p.finish();
  }
  if (s.has("train")) parse_train(s.raw("train"), "train", cfg.train);
  cfg.probe = cfg.train;
  if (s.has("probe")) parse_train(s.raw("probe"), "probe", cfg.probe);

  if (!s.has("splits")) throw ConfigError("missing required config key 'splits'");
  {
    Section p(s.raw("splits"), "splits");
    cfg.splits.train = p.required<std::vector<std::string>>("train");
    cfg.splits.valid = p.required<std::vector<std::string>>("valid");
    cfg.splits.test = p.required<std::vector<std::string>>("test");
    p.finish();
  }
  if (s.has("experiments")) {
    Section p(s.raw("experiments"), "experiments");
    auto& e = cfg.experiments;
    if (p.has("methods")) {
      e.methods.clear();
      for (const auto& m : p.required<std::vector<std::string>>("methods")) e.methods.push_back(eval::method_from_name(m));
    }
    if (p.has("budgets")) {
      e.budgets.clear();
      for (const auto& b : p.raw("budgets")) e.budgets.push_back(parse_budget(b));
    }
    p.read("n_seeds", e.n_seeds);
    if (p.has("tau_pairs")) {
      e.tau_pairs.clear();
      for (const auto& pair : p.required<std::vector<std::vector<double>>>("tau_pairs")) {
        if (pair.size() != 2) throw ConfigError("config key 'experiments.tau_pairs' entries must be [tau_pos_s, tau_neg_s]");
        e.tau_pairs.emplace_back(pair[0], pair[1]);
      }
    }
    if (p.has("sweep_task")) {
      const auto t = models::task_from_name(p.required<std::string>("sweep_task"));
      if (t != models::ModelTask::RP && t != models::ModelTask::TS) {
        throw ConfigError("config key 'experiments.sweep_task' must be rp or ts");
      }
      e.sweep_task = t == models::ModelTask::RP ? ssl::PretextTask::RP : ssl::PretextTask::TS;
    }
    p.read("embed_features", e.embed_features);
    p.finish();
  }
  s.finish();

  cfg.sampler.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.probe.seed = cfg.seed;
  validate(cfg);
  return cfg;
}

}  // namespace

std::filesystem::path ExperimentConfig::checkpoint(std::string_view task) const {
  return run_dir() / "checkpoints" / (std::string(task) + ".tckp");
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& known) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& k : known) {
    std::vector<std::size_t> prev(k.size() + 1), cur(k.size() + 1);
    for (std::size_t j = 0; j <= k.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= key.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= k.size(); ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (key[i - 1] == k[j - 1] ? 0 : 1)});
      }
      std::swap(prev, cur);
    }
    if (prev[k.size()] < best_d) {
      best_d = prev[k.size()];
      best = k;
    }
  }
  return best;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.run_name.empty() || cfg.run_name.find('/') != std::string::npos) {
    throw ConfigError("config key 'run_name' must be a non-empty name without '/'");
  }
  if (!(cfg.window_s > 0.0)) throw ConfigError("config key 'preprocess.window_s' must be positive");
  if (!(cfg.preprocess.cutoff_hz > 0.0)) throw ConfigError("config key 'preprocess.cutoff_hz' must be positive");
  if (cfg.preprocess.target_rate_hz < 0.0) throw ConfigError("config key 'preprocess.target_rate_hz' must not be negative");
  cfg.sampler.validate();
  cfg.train.validate();
  cfg.probe.validate();
  if (cfg.model.kernel == 0 || cfg.model.pool == 0 || cfg.model.embed_dim == 0) {
    throw ConfigError("config keys 'model.kernel', 'model.pool' and 'model.embed_dim' must be positive");
  }
  if (!(cfg.model.dropout >= 0.0 && cfg.model.dropout < 1.0)) throw ConfigError("config key 'model.dropout' must lie in [0, 1)");
  if (cfg.splits.train.empty() || cfg.splits.valid.empty() || cfg.splits.test.empty()) {
    throw ConfigError("every split (train, valid, test) needs at least one subject");
  }
  eval::check_disjoint(cfg.splits);
  if (cfg.experiments.n_seeds == 0) throw ConfigError("config key 'experiments.n_seeds' must be at least 1");

  if (cfg.dataset.kind == DatasetSpec::Kind::Synthetic) {
    std::set<std::string> ids;
    for (const auto& s : cfg.dataset.subjects) {
      if (!ids.insert(s.id).second) throw ConfigError("synthetic subject '" + s.id + "' is listed twice");
      if (!(s.hours > 0.0)) throw ConfigError("synthetic subject '" + s.id + "' needs a positive length");
    }
    for (const auto* split : {&cfg.splits.train, &cfg.splits.valid, &cfg.splits.test}) {
      for (const auto& id : *split) {
        if (!ids.contains(id)) throw ConfigError("split subject '" + id + "' is not a synthetic subject");
      }
    }
    auto probe = cfg.dataset.synthetic;
    probe.duration_s = probe.block_s;
    probe.validate();
  } else {
    if (!std::filesystem::is_directory(cfg.dataset.edf.directory)) {
      throw ConfigError("EDF directory '" + cfg.dataset.edf.directory.string() + "' does not exist");
    }
    if (cfg.dataset.edf.sidecar.find("{stem}") == std::string::npos) {
      throw ConfigError("config key 'dataset.edf.sidecar' must contain {stem}");
    }
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config document: ") + e.what());
  }
  return parse_json(root);
}

namespace {
json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config '" + path.string() + "': " + e.what());
  }
}
}  // namespace

ExperimentConfig parse_config(const std::filesystem::path& path) { return parse_json(load_json(path)); }

ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  auto root = load_json(path);
  for (const auto& o : overrides) set_override(root, o);
  return parse_json(root);
}

}  // namespace tempo::cli
