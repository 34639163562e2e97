#include "tempo/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "tempo/common/csv.hpp"
#include "tempo/common/error.hpp"
#include "tempo/common/log.hpp"
#include "tempo/common/parallel.hpp"
#include "tempo/eval/embedding.hpp"
#include "tempo/eval/experiments.hpp"
#include "tempo/eval/metrics.hpp"
#include "tempo/models/checkpoint.hpp"
#include "tempo/signal/edf.hpp"
#include "tempo/signal/synthetic.hpp"
#include "tempo/signal/window_cache.hpp"
#include "tempo/train/trainer.hpp"

namespace tempo::cli {

namespace fs = std::filesystem;

namespace {

struct Splits {
  signal::WindowDataset train, valid, test;
};

std::string replace_stem(std::string pattern, const std::string& stem) {
  const std::string token = "{stem}";
  for (auto pos = pattern.find(token); pos != std::string::npos; pos = pattern.find(token)) {
    pattern.replace(pos, token.size(), stem);
  }
  return pattern;
}

signal::SyntheticConfig synthetic_for(const ExperimentConfig& cfg, const SyntheticSubject& s) {
  auto c = cfg.dataset.synthetic;
  c.seed = s.seed;
  c.duration_s = s.hours * 3600.0;
  c.subject_id = s.id;
  c.age_years = s.age_years;
  return c;
}

Splits split(const ExperimentConfig& cfg, const signal::WindowDataset& ds) {
  Splits s{ds.subset_by_subjects(cfg.splits.train), ds.subset_by_subjects(cfg.splits.valid),
           ds.subset_by_subjects(cfg.splits.test)};
  for (auto [d, name] : {std::pair{&s.train, "train"}, {&s.valid, "valid"}, {&s.test, "test"}}) {
    if (d->empty()) throw ConfigError(std::string("no windows for the subjects of the ") + name + " split");
  }
  eval::check_disjoint(s.train, s.valid, s.test);
  return s;
}

Splits labeled(const Splits& s) {
  return {eval::labeled_subset(s.train), eval::labeled_subset(s.valid), eval::labeled_subset(s.test)};
}

models::ExtractorConfig model_for(const ExperimentConfig& cfg, const signal::WindowDataset& ds) {
  auto m = cfg.model;
  m.channels = ds.channels;
  m.window_samples = ds.window_samples;
  m.validate();
  return m;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  ensure_dir(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

void write_history(const ExperimentConfig& cfg, const std::string& task, const train::TrainHistory& h) {
  auto out = open_out(cfg.run_dir() / ("history_" + task + ".csv"));
  h.write_csv(out);
}

models::ModelBundle<float> require_checkpoint(const ExperimentConfig& cfg, std::string_view task) {
  const auto path = cfg.checkpoint(task);
  if (!fs::exists(path)) {
    throw ConfigError("missing checkpoint '" + path.string() + "'; run `pretrain --task " + std::string(task) +
                      "` first");
  }
  return models::load_checkpoint(path).bundle;
}

/// Frozen extractor for a feature name; rand is a seeded untrained network.
models::ModelBundle<float> frozen_bundle(const ExperimentConfig& cfg, const std::string& features,
                                         const models::ExtractorConfig& model) {
  if (features == "rand") return models::make_bundle<float>(models::ModelTask::RP, model, mix_seed(cfg.seed, 0xa11d));
  if (features == "rp" || features == "ts" || features == "ae" || features == "supervised") {
    auto b = require_checkpoint(cfg, features);
    if (!(b.config == model)) {
      throw ShapeError("checkpoint '" + cfg.checkpoint(features).string() + "' was trained on a different window layout");
    }
    return b;
  }
  throw ConfigError("unknown feature set '" + features + "'");
}

eval::EmbeddingMatrix features_of(const std::string& name, const models::ModelBundle<float>* bundle,
                                  const signal::WindowDataset& ds) {
  return name == "handcrafted" ? eval::handcrafted_embedding(ds) : eval::embed_dataset(*bundle, ds);
}

std::string budget_str(const std::optional<std::size_t>& b) { return b ? std::to_string(*b) : "ALL"; }

std::optional<std::size_t> parse_budget_arg(const std::string& s) {
  if (s == "ALL" || s == "all") return std::nullopt;
  std::size_t pos = 0;
  const auto v = std::stoul(s, &pos);
  if (pos != s.size() || v == 0) throw ConfigError("--n-per-class must be a positive integer or ALL");
  return v;
}

// ---- commands -------------------------------------------------------------------

void cmd_ingest(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ds = ingest(cfg);
  ensure_dir(cfg.run_dir());
  signal::save_window_cache(ds, cfg.window_cache());
  out << "ingest: " << ds.size() << " windows from " << ds.recordings.size() << " recordings -> "
      << cfg.window_cache().string() << '\n';
}

void cmd_pretrain(const ExperimentConfig& cfg, const std::string& task_name, std::ostream& out) {
  const auto task = models::task_from_name(task_name);
  const auto ds = load_or_ingest(cfg);
  const auto s = split(cfg, ds);
  const auto model = model_for(cfg, ds);
  const std::string name(models::task_name(task));
  train::FitResult fit;
  std::string metric;
  if (task == models::ModelTask::RP || task == models::ModelTask::TS) {
    const auto pt = task == models::ModelTask::RP ? ssl::PretextTask::RP : ssl::PretextTask::TS;
    auto seeded = [&](std::uint64_t stream) {
      auto c = cfg.sampler;
      c.seed = mix_seed(cfg.seed, stream);
      return c;
    };
    const auto tr = eval::sample_pretext(s.train, pt, seeded(0));
    const auto va = eval::sample_pretext(s.valid, pt, seeded(1));
    const auto te = eval::sample_pretext(s.test, pt, seeded(2));
    fit = train::fit_pretext(s.train, tr, s.valid, va, model, cfg.train);
    const double acc = eval::pretext_balanced_accuracy(fit.bundle, s.test, te);
    auto m = open_out(cfg.run_dir() / ("pretrain_" + name + "_metrics.csv"));
    m << "split,examples,balanced_accuracy\ntest," << te.size() << ',' << csv::format_real(acc) << '\n';
    metric = "test pretext balanced accuracy " + csv::format_real(acc, 4);
  } else if (task == models::ModelTask::AE) {
    fit = train::fit_autoencoder(s.train, s.valid, model, cfg.train);
    const double mse = train::reconstruction_mse(fit.bundle, s.test);
    auto m = open_out(cfg.run_dir() / "pretrain_ae_metrics.csv");
    m << "split,windows,mse\ntest," << s.test.size() << ',' << csv::format_real(mse) << '\n';
    metric = "test reconstruction MSE " + csv::format_real(mse, 4);
  } else {
    throw ConfigError("pretrain --task must be rp, ts or ae");
  }
  ensure_dir(cfg.checkpoint(name).parent_path());
  models::save_checkpoint(fit.bundle, cfg.checkpoint(name), fit.history.summary());
  write_history(cfg, name, fit.history);
  out << "pretrain " << name << ": best epoch " << fit.history.best_epoch << " of " << fit.history.stopped_epoch << ", "
      << metric << " -> " << cfg.checkpoint(name).string() << '\n';
}

void cmd_train_supervised(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ds = load_or_ingest(cfg);
  const auto s = labeled(split(cfg, ds));
  const auto model = model_for(cfg, ds);
  const auto fit = train::fit_supervised(s.train, s.valid, model, cfg.train);
  const auto h = eval::embed_dataset(fit.bundle, s.test);
  nn::Tape<float> tape(false);
  const nn::Tensor<float> ht({h.rows, h.cols}, std::vector<float>(h.values.begin(), h.values.end()));
  const auto logits = models::supervised_logits(tape, fit.bundle.head, ht);
  const auto z = logits.values();
  std::vector<std::size_t> pred(h.rows);
  for (std::size_t i = 0; i < h.rows; ++i) {
    const auto first = z.begin() + static_cast<std::ptrdiff_t>(i * models::kStageClasses);
    pred[i] = static_cast<std::size_t>(std::max_element(first, first + models::kStageClasses) - first);
  }
  const auto truth = train::stage_labels(s.test);
  const double acc = eval::balanced_accuracy(std::span<const std::size_t>(pred), std::span<const std::size_t>(truth));
  ensure_dir(cfg.checkpoint("supervised").parent_path());
  models::save_checkpoint(fit.bundle, cfg.checkpoint("supervised"), fit.history.summary());
  write_history(cfg, "supervised", fit.history);
  auto m = open_out(cfg.run_dir() / "supervised_metrics.csv");
  m << "split,windows,balanced_accuracy\ntest," << s.test.size() << ',' << csv::format_real(acc) << '\n';
  out << "train-supervised: best epoch " << fit.history.best_epoch << " of " << fit.history.stopped_epoch
      << ", test balanced accuracy " << csv::format_real(acc, 4) << " -> " << cfg.checkpoint("supervised").string()
      << '\n';
}

void cmd_probe(const ExperimentConfig& cfg, const std::string& features, const std::string& budget_arg,
               std::ostream& out) {
  static const std::vector<std::string> kFeatures{"rp", "ts", "ae", "rand", "handcrafted"};
  if (std::ranges::find(kFeatures, features) == kFeatures.end()) {
    throw ConfigError("probe --features must be one of rp, ts, ae, rand, handcrafted");
  }
  const auto budget = parse_budget_arg(budget_arg);
  const auto ds = load_or_ingest(cfg);
  const auto model = model_for(cfg, ds);
  std::optional<models::ModelBundle<float>> bundle;
  if (features != "handcrafted") bundle = frozen_bundle(cfg, features, model);
  const auto s = labeled(split(cfg, ds));
  const auto* b = bundle ? &*bundle : nullptr;
  const auto tr = features_of(features, b, s.train);
  const auto va = features_of(features, b, s.valid);
  const auto te = features_of(features, b, s.test);
  auto csv_out = open_out(cfg.run_dir() / ("probe_" + features + ".csv"));
  csv_out << "features,n_per_class,seed,balanced_accuracy\n";
  double mean = 0.0;
  for (std::size_t k = 0; k < cfg.experiments.n_seeds; ++k) {
    const auto seed = mix_seed(cfg.seed, k);
    const double acc = eval::probe_balanced_accuracy(tr, va, te, cfg.probe, budget, seed);
    csv_out << features << ',' << budget_str(budget) << ',' << seed << ',' << csv::format_real(acc) << '\n';
    mean += acc / static_cast<double>(cfg.experiments.n_seeds);
  }
  out << "probe " << features << ": n_per_class " << budget_str(budget) << ", mean test balanced accuracy "
      << csv::format_real(mean, 4) << " over " << cfg.experiments.n_seeds << " seeds -> "
      << (cfg.run_dir() / ("probe_" + features + ".csv")).string() << '\n';
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& task_override, std::ostream& out) {
  auto task = cfg.experiments.sweep_task;
  if (!task_override.empty()) {
    const auto t = models::task_from_name(task_override);
    if (t != models::ModelTask::RP && t != models::ModelTask::TS) throw ConfigError("sweep --task must be rp or ts");
    task = t == models::ModelTask::RP ? ssl::PretextTask::RP : ssl::PretextTask::TS;
  }
  const auto ds = load_or_ingest(cfg);
  const auto s = split(cfg, ds);
  eval::SweepInputs in;
  in.train = &s.train;
  in.valid = &s.valid;
  in.test = &s.test;
  in.sampler = cfg.sampler;
  in.model = model_for(cfg, ds);
  in.pretext = cfg.train;
  in.probe = cfg.probe;
  const auto result = eval::run_tau_sweep(cfg.experiments.tau_pairs, task, in);
  const auto path = cfg.run_dir() / "sweep.csv";
  auto csv_out = open_out(path);
  eval::write_sweep_csv(result.rows, csv_out);
  out << "sweep " << ssl::task_name(task) << ": " << result.rows.size() << " tau settings -> " << path.string() << '\n';
}

void cmd_curve(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ds = load_or_ingest(cfg);
  const auto model = model_for(cfg, ds);
  std::map<eval::Method, models::ModelBundle<float>> owned;
  for (auto m : cfg.experiments.methods) {
    if (m == eval::Method::RP || m == eval::Method::TS || m == eval::Method::AE || m == eval::Method::RandInit) {
      owned.emplace(m, frozen_bundle(cfg, std::string(eval::method_name(m)), model));
    }
  }
  const auto s = labeled(split(cfg, ds));
  eval::CurveInputs in;
  in.train = &s.train;
  in.valid = &s.valid;
  in.test = &s.test;
  for (const auto& [m, b] : owned) in.bundles[m] = &b;
  in.model = model;
  in.probe = cfg.probe;
  in.supervised = cfg.train;
  const auto rows =
      eval::run_lowdata_curve(cfg.experiments.methods, cfg.experiments.budgets, cfg.experiments.n_seeds, in, cfg.seed);
  const auto path = cfg.run_dir() / "curve.csv";
  auto csv_out = open_out(path);
  eval::write_curve_csv(rows, csv_out);
  out << "curve: " << rows.size() << " rows (" << cfg.experiments.methods.size() << " methods x "
      << cfg.experiments.budgets.size() << " budgets x " << cfg.experiments.n_seeds << " seeds) -> " << path.string()
      << '\n';
}

void cmd_embed(const ExperimentConfig& cfg, std::string features, std::ostream& out) {
  if (features.empty()) features = cfg.experiments.embed_features;
  const auto ds = load_or_ingest(cfg);
  const auto model = model_for(cfg, ds);
  std::optional<models::ModelBundle<float>> bundle;
  if (features != "handcrafted") bundle = frozen_bundle(cfg, features, model);
  const auto m = features_of(features, bundle ? &*bundle : nullptr, ds);
  const auto path = cfg.run_dir() / ("embeddings_" + features + ".csv");
  ensure_dir(path.parent_path());
  eval::export_embeddings(m, path);
  out << "embed " << features << ": " << m.rows << " x " << m.cols << " -> " << path.string() << '\n';
}

void cmd_synth(const ExperimentConfig& cfg, const std::string& dir_arg, std::ostream& out) {
  if (cfg.dataset.kind != DatasetSpec::Kind::Synthetic) throw ConfigError("synth needs a synthetic dataset config");
  const fs::path dir = dir_arg.empty() ? cfg.run_dir() / "edf" : fs::path(dir_arg);
  ensure_dir(dir);
  for (const auto& sub : cfg.dataset.subjects) {
    const auto rec = signal::generate_synthetic(synthetic_for(cfg, sub));
    const auto edf = signal::write_edf_file(signal::recording_to_edf(rec));
    signal::write_file_bytes(dir / (sub.id + ".edf"), edf);
    auto hyp = open_out(dir / replace_stem(cfg.dataset.edf.sidecar, sub.id));
    hyp << signal::format_hypnogram(rec.annotations);
  }
  out << "synth: " << cfg.dataset.subjects.size() << " recordings -> " << dir.string() << '\n';
}

}  // namespace

std::vector<std::pair<std::string, signal::Recording>> load_recordings(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, signal::Recording>> out;
  if (cfg.dataset.kind == DatasetSpec::Kind::Synthetic) {
    for (const auto& sub : cfg.dataset.subjects) out.emplace_back(sub.id, signal::generate_synthetic(synthetic_for(cfg, sub)));
    return out;
  }
  const auto& src = cfg.dataset.edf;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(src.directory)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() >= src.pattern.size() && name.ends_with(src.pattern)) files.push_back(e.path());
  }
  std::ranges::sort(files);
  if (files.empty()) {
    throw IoError("no files ending in '" + src.pattern + "' under '" + src.directory.string() + "'");
  }
  for (const auto& f : files) {
    const auto bytes = signal::read_file_bytes(f);
    auto rec = signal::parse_edf(bytes);
    const std::string stem = f.filename().string().substr(0, f.filename().string().size() - src.pattern.size());
    std::istringstream patient(rec.subject_id);
    std::string code;
    patient >> code;
    rec.subject_id = (code.empty() || code == "X") ? stem : code;
    if (const auto it = src.ages.find(rec.subject_id); it != src.ages.end()) rec.age_years = it->second;
    const auto sidecar = f.parent_path() / replace_stem(src.sidecar, stem);
    if (fs::exists(sidecar)) {
      std::ifstream in(sidecar);
      std::stringstream text;
      text << in.rdbuf();
      rec.annotations = signal::parse_hypnogram(text.str());
    } else {
      log_warn("no hypnogram '{}' for '{}'; its windows stay unlabeled", sidecar.string(), f.string());
    }
    out.emplace_back(stem, std::move(rec));
  }
  return out;
}

signal::WindowDataset ingest(const ExperimentConfig& cfg) {
  const auto scheme = cfg.dataset.kind == DatasetSpec::Kind::Edf ? cfg.dataset.edf.scheme : signal::LabelScheme::AASM;
  signal::WindowDataset ds;
  for (auto& [id, rec] : load_recordings(cfg)) {
    const auto pre = signal::preprocess(rec, cfg.preprocess);
    ds.append(signal::extract_windows(pre, cfg.window_s, scheme, id));
  }
  if (ds.empty()) throw IoError("the dataset produced no windows");
  ds.validate();
  return ds;
}

signal::WindowDataset load_or_ingest(const ExperimentConfig& cfg) {
  if (fs::exists(cfg.window_cache())) return signal::load_window_cache(cfg.window_cache());
  log_info("window cache '{}' not found; ingesting first", cfg.window_cache().string());
  auto ds = ingest(cfg);
  ensure_dir(cfg.run_dir());
  signal::save_window_cache(ds, cfg.window_cache());
  return ds;
}

int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  auto valid_list = [] {
    std::string s;
    for (const char* c : kCommands) s += (s.empty() ? "" : ", ") + std::string(c);
    return s;
  };
  const auto first = std::ranges::find_if(args, [](const std::string& a) { return !a.starts_with("-"); });
  if (first == args.end() && std::ranges::none_of(args, [](const auto& a) { return a == "-h" || a == "--help"; })) {
    err << "error: no command given; valid commands: " << valid_list() << '\n';
    return 2;
  }
  if (first != args.end() && std::ranges::find(kCommands, *first) == std::end(kCommands)) {
    err << "error: unknown command '" << *first << "'; valid commands: " << valid_list() << '\n';
    return 2;
  }

  CLI::App app{"Self-supervised representation learning for EEG windows", "tempo_contrast"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t threads = 0;
  std::string run_name, out_dir, task, features, budget = "ALL", dir;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--set", overrides, "override a config value, e.g. --set train.lr=0.01");
    sub->add_option("--threads", threads, "worker threads (default: TEMPO_CONTRAST_THREADS or all cores)");
    sub->add_option("--run-name", run_name, "override run_name");
    sub->add_option("--out", out_dir, "override output_dir");
  };
  auto* ingest_cmd = app.add_subcommand("ingest", "preprocess and window the dataset into the cache");
  auto* pretrain_cmd = app.add_subcommand("pretrain", "train an RP, TS or autoencoder feature extractor");
  pretrain_cmd->add_option("--task", task, "rp, ts or ae")->required()->check(CLI::IsMember({"rp", "ts", "ae"}));
  auto* sup_cmd = app.add_subcommand("train-supervised", "train extractor and softmax head on stage labels");
  auto* probe_cmd = app.add_subcommand("probe", "linear probe on frozen features");
  probe_cmd->add_option("--features", features, "rp, ts, ae, rand or handcrafted")->required();
  probe_cmd->add_option("--n-per-class", budget, "labeled windows per class (integer or ALL)");
  auto* sweep_cmd = app.add_subcommand("sweep", "pretext/probe accuracy across tau settings");
  sweep_cmd->add_option("--task", task, "rp or ts (default: experiments.sweep_task)");
  auto* curve_cmd = app.add_subcommand("curve", "probe accuracy across labeled-data budgets");
  auto* embed_cmd = app.add_subcommand("embed", "export window embeddings with metadata");
  embed_cmd->add_option("--features", features, "rp, ts, ae, rand, supervised or handcrafted");
  auto* synth_cmd = app.add_subcommand("synth", "write the synthetic recordings as EDF files with hypnograms");
  synth_cmd->add_option("--dir", dir, "output directory (default: <run>/edf)");
  for (auto* sub : {ingest_cmd, pretrain_cmd, sup_cmd, probe_cmd, sweep_cmd, curve_cmd, embed_cmd, synth_cmd}) common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    if (!run_name.empty()) overrides.push_back("run_name=\"" + run_name + "\"");
    if (!out_dir.empty()) overrides.push_back("output_dir=\"" + out_dir + "\"");
    const auto cfg = parse_config(config_path, overrides);
    if (*ingest_cmd) cmd_ingest(cfg, out);
    else if (*pretrain_cmd) cmd_pretrain(cfg, task, out);
    else if (*sup_cmd) cmd_train_supervised(cfg, out);
    else if (*probe_cmd) cmd_probe(cfg, features, budget, out);
    else if (*sweep_cmd) cmd_sweep(cfg, task, out);
    else if (*curve_cmd) cmd_curve(cfg, out);
    else if (*embed_cmd) cmd_embed(cfg, features, out);
    else if (*synth_cmd) cmd_synth(cfg, dir, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace tempo::cli
