#include "tempo/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "tempo/common/csv.hpp"
#include "tempo/common/error.hpp"
#include "tempo/common/log.hpp"
#include "tempo/common/parallel.hpp"
#include "tempo/common/random.hpp"
#include "tempo/nn/losses.hpp"
#include "tempo/nn/ops.hpp"
#include "tempo/train/pretext_batch.hpp"

namespace tempo::train {

using models::ModelBundle;
using models::ModelTask;
using nn::Tape;
using nn::Tensor;

PretextBatch make_pretext_batch(const ssl::PretextDataset& data, std::span<const std::size_t> examples) {
  PretextBatch b;
  const bool rp = data.task == ssl::PretextTask::RP;
  for (auto i : examples) {
    if (rp) {
      b.windows.push_back(data.rp[i].anchor);
      b.windows.push_back(data.rp[i].other);
    } else {
      b.windows.push_back(data.ts[i].first);
      b.windows.push_back(data.ts[i].middle);
      b.windows.push_back(data.ts[i].last);
    }
  }
  std::ranges::sort(b.windows);
  b.windows.erase(std::unique(b.windows.begin(), b.windows.end()), b.windows.end());
  auto row = [&](std::size_t w) {
    return static_cast<std::size_t>(std::ranges::lower_bound(b.windows, w) - b.windows.begin());
  };
  for (auto i : examples) {
    if (rp) {
      b.first.push_back(row(data.rp[i].anchor));
      b.last.push_back(row(data.rp[i].other));
      b.labels.push_back(data.rp[i].y);
    } else {
      b.first.push_back(row(data.ts[i].first));
      b.middle.push_back(row(data.ts[i].middle));
      b.last.push_back(row(data.ts[i].last));
      b.labels.push_back(data.ts[i].y);
    }
  }
  return b;
}

template <typename T>
Tensor<T> batch_scores(Tape<T>& tape, const ModelBundle<T>& bundle, const Tensor<T>& h, const PretextBatch& b,
                       ssl::PretextTask task) {
  const auto h1 = nn::gather_rows(tape, h, std::span<const std::size_t>(b.first));
  const auto h3 = nn::gather_rows(tape, h, std::span<const std::size_t>(b.last));
  Tensor<T> g;
  if (task == ssl::PretextTask::RP) {
    g = models::contrast_rp(tape, h1, h3);
  } else {
    const auto h2 = nn::gather_rows(tape, h, std::span<const std::size_t>(b.middle));
    g = models::contrast_ts(tape, h1, h2, h3);
  }
  return models::pretext_score(tape, g, bundle.head.at("contrast.weight"), bundle.head.at("contrast.bias"));
}

template Tensor<float> batch_scores<float>(Tape<float>&, const ModelBundle<float>&, const Tensor<float>&,
                                           const PretextBatch&, ssl::PretextTask);
template Tensor<double> batch_scores<double>(Tape<double>&, const ModelBundle<double>&, const Tensor<double>&,
                                             const PretextBatch&, ssl::PretextTask);

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be at least 1");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be at least 1");
  if (patience_epochs > max_epochs) throw ConfigError("train: patience_epochs exceeds max_epochs");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
}

void TrainHistory::write_csv(std::ostream& out, bool with_seconds) const {
  out << "epoch,train_loss,valid_loss,seconds\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << csv::format_real(e.train_loss) << ',' << csv::format_real(e.valid_loss) << ',';
    if (with_seconds) out << csv::format_real(e.seconds, 6);
    out << '\n';
  }
}

models::TrainingSummary TrainHistory::summary() const {
  models::TrainingSummary s;
  s.best_epoch = best_epoch;
  s.stopped_epoch = stopped_epoch;
  if (best_epoch > 0) s.best_valid_loss = best_valid_loss;
  return s;
}

bool EarlyStopping::update(std::size_t epoch, double loss) {
  if (loss < best_loss_ || best_epoch_ == 0) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

TrainHistory run_training(const TrainConfig& cfg, const TrainingHooks& hooks) {
  cfg.validate();
  TrainHistory history;
  EarlyStopping stopper(cfg.patience_epochs);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = hooks.train_epoch(epoch);
    rec.valid_loss = hooks.validate();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(rec.valid_loss)) {
      throw Error("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    history.epochs.push_back(rec);
    if (stopper.update(epoch, rec.valid_loss) && hooks.keep_best) hooks.keep_best();
    log_debug("epoch {}: train {:.6f} valid {:.6f} ({:.1f} s)", epoch, rec.train_loss, rec.valid_loss, rec.seconds);
    history.stopped_epoch = epoch;
    if (stopper.should_stop(epoch)) break;
  }
  history.best_epoch = stopper.best_epoch();
  history.best_valid_loss = stopper.best_loss();
  if (hooks.restore_best) hooks.restore_best();
  return history;
}

namespace {

void check_finite(double loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                "; lower the learning rate or check the input windows");
  }
}

void check_layout(const signal::WindowDataset& ds, const models::ExtractorConfig& model, const char* what) {
  if (ds.channels != model.channels || ds.window_samples != model.window_samples) {
    throw ShapeError(std::string(what) + " windows are " + std::to_string(ds.channels) + " x " +
                     std::to_string(ds.window_samples) + " but the model expects " + std::to_string(model.channels) +
                     " x " + std::to_string(model.window_samples));
  }
}

/// Training state shared by every loop: bundle, optimizer, best snapshot.
struct Session {
  ModelBundle<float> bundle;
  nn::Adam<float> adam;
  models::ParameterSet<float> best_extractor;
  models::ParameterSet<float> best_head;
  Rng shuffle_rng;
  Rng dropout_rng;

  Session(ModelBundle<float> b, const TrainConfig& cfg)
      : bundle(std::move(b)),
        adam(bundle.parameters(), cfg.adam()),
        shuffle_rng(make_rng(cfg.seed, 1)),
        dropout_rng(make_rng(cfg.seed, 2)) {}

  TrainingHooks hooks(std::function<double(std::size_t)> train_epoch, std::function<double()> validate) {
    return {std::move(train_epoch), std::move(validate),
            [this] {
              best_extractor = bundle.extractor.clone();
              best_head = bundle.head.clone();
            },
            [this] {
              bundle.extractor.assign(best_extractor);
              bundle.head.assign(best_head);
            }};
  }

  std::vector<std::size_t> shuffled(std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    return order;
  }
};

ModelBundle<float> initial_bundle(ModelTask task, const models::ExtractorConfig& model, const TrainConfig& cfg,
                                  const ModelBundle<float>* init) {
  auto b = models::make_bundle<float>(task, model, cfg.seed);
  if (init) {
    models::copy_extractor(*init, b);
    if (init->task == task) models::copy_head(*init, b);
  }
  return b;
}

ModelTask model_task(ssl::PretextTask t) { return t == ssl::PretextTask::RP ? ModelTask::RP : ModelTask::TS; }

void check_pretext(const ModelBundle<float>& bundle, const ssl::PretextDataset& data) {
  if (bundle.task != model_task(data.task)) {
    throw ConfigError("a " + std::string(models::task_name(bundle.task)) + " model cannot score " +
                      std::string(ssl::task_name(data.task)) + " examples");
  }
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

std::vector<double> pretext_scores(const ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                                   const ssl::PretextDataset& data) {
  check_pretext(bundle, data);
  const auto all = iota_indices(data.size());
  const auto b = make_pretext_batch(data, all);
  const auto h = models::embed_windows(bundle.extractor, bundle.config, windows, b.windows);
  Tape<float> tape(false);
  const auto s = batch_scores(tape, bundle, h, b, data.task);
  return {s.values().begin(), s.values().end()};
}

double pretext_loss(const ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                    const ssl::PretextDataset& data) {
  if (data.empty()) throw ConfigError("pretext loss of an empty dataset");
  const auto scores = pretext_scores(bundle, windows, data);
  // Same stable form as the training loss, accumulated in double.
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double z = data.label(i) * scores[i];
    total += std::log1p(std::exp(-std::abs(z))) + std::max(0.0, -z);
  }
  return total / static_cast<double>(scores.size());
}

FitResult fit_pretext(const signal::WindowDataset& train_windows, const ssl::PretextDataset& train,
                      const signal::WindowDataset& valid_windows, const ssl::PretextDataset& valid,
                      const models::ExtractorConfig& model, const TrainConfig& cfg,
                      const ModelBundle<float>* init) {
  cfg.validate();
  model.validate();
  if (train.empty()) throw ConfigError("pretext training set is empty");
  if (valid.empty()) throw ConfigError("pretext validation set is empty");
  if (train.task != valid.task) throw ConfigError("training and validation pretext tasks differ");
  check_layout(train_windows, model, "training");
  check_layout(valid_windows, model, "validation");

  Session s(initial_bundle(model_task(train.task), model, cfg, init), cfg);
  auto train_epoch = [&](std::size_t epoch) {
    const auto order = s.shuffled(train.size());
    double total = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size, ++batch_no) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const auto b = make_pretext_batch(train, std::span(order).subspan(lo, hi - lo));
      Tape<float> tape;
      const auto x = models::stack_windows<float>(train_windows, b.windows);
      const auto h = models::extract_features(tape, s.bundle.extractor, model, x, models::Mode::Train, s.dropout_rng);
      const auto scores = batch_scores(tape, s.bundle, h, b, train.task);
      const auto loss = nn::binary_logistic_loss(tape, scores, std::span<const int>(b.labels));
      check_finite(loss.item(), epoch, batch_no);
      tape.backward(loss);
      s.adam.step();
      total += static_cast<double>(loss.item()) * static_cast<double>(hi - lo);
    }
    return total / static_cast<double>(order.size());
  };
  auto validate = [&] { return pretext_loss(s.bundle, valid_windows, valid); };
  auto history = run_training(cfg, s.hooks(train_epoch, validate));
  return {std::move(s.bundle), std::move(history)};
}

std::vector<double> compute_class_weights(std::span<const std::size_t> labels, std::size_t n_classes) {
  if (labels.empty()) throw ConfigError("class weights of an empty label set");
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto y : labels) {
    if (y >= n_classes) throw ConfigError("label " + std::to_string(y) + " outside the class range");
    ++counts[y];
  }
  const auto present = static_cast<double>(std::ranges::count_if(counts, [](auto c) { return c > 0; }));
  const auto n = static_cast<double>(labels.size());
  std::vector<double> w(n_classes, 1.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] > 0) w[c] = n / (present * static_cast<double>(counts[c]));
  }
  return w;
}

std::vector<std::size_t> stage_labels(const signal::WindowDataset& ds) {
  std::vector<std::size_t> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& st = ds.windows[i].stage;
    if (!st) throw ConfigError("window " + std::to_string(i) + " has no stage label");
    out.push_back(signal::stage_index(*st));
  }
  return out;
}

double supervised_loss(const ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                       std::span<const double> class_weights) {
  const auto labels = stage_labels(windows);
  const auto h = models::embed_windows(bundle.extractor, bundle.config, windows, iota_indices(windows.size()));
  Tape<float> tape(false);
  const auto logits = models::supervised_logits(tape, bundle.head, h);
  return nn::weighted_cross_entropy(tape, logits, std::span<const std::size_t>(labels), class_weights).item();
}

FitResult fit_supervised(const signal::WindowDataset& train, const signal::WindowDataset& valid,
                         const models::ExtractorConfig& model, const TrainConfig& cfg,
                         std::optional<std::vector<double>> class_weights) {
  cfg.validate();
  model.validate();
  if (train.empty()) throw ConfigError("supervised training set is empty");
  if (valid.empty()) throw ConfigError("supervised validation set is empty");
  check_layout(train, model, "training");
  check_layout(valid, model, "validation");
  const auto labels = stage_labels(train);
  const auto valid_labels = stage_labels(valid);
  std::vector<bool> in_train(models::kStageClasses, false);
  for (auto y : labels) in_train[y] = true;
  std::vector<std::string> missing;
  for (auto y : valid_labels) {
    const auto name = std::string(signal::stage_name(signal::kAllStages[y]));
    if (!in_train[y] && std::ranges::find(missing, name) == missing.end()) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("class absent from the training split: " + list);
  }
  const auto weights = class_weights ? *class_weights : compute_class_weights(labels, models::kStageClasses);
  if (weights.size() != models::kStageClasses) throw ConfigError("expected one class weight per stage");

  Session s(models::make_bundle<float>(ModelTask::Supervised, model, cfg.seed), cfg);
  auto train_epoch = [&](std::size_t epoch) {
    const auto order = s.shuffled(train.size());
    double total = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size, ++batch_no) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const auto idx = std::span(order).subspan(lo, hi - lo);
      std::vector<std::size_t> y;
      for (auto i : idx) y.push_back(labels[i]);
      Tape<float> tape;
      const auto x = models::stack_windows<float>(train, idx);
      const auto h = models::extract_features(tape, s.bundle.extractor, model, x, models::Mode::Train, s.dropout_rng);
      const auto logits = models::supervised_logits(tape, s.bundle.head, h);
      const auto loss = nn::weighted_cross_entropy(tape, logits, std::span<const std::size_t>(y), weights);
      check_finite(loss.item(), epoch, batch_no);
      tape.backward(loss);
      s.adam.step();
      total += static_cast<double>(loss.item()) * static_cast<double>(hi - lo);
    }
    return total / static_cast<double>(order.size());
  };
  auto validate = [&] { return supervised_loss(s.bundle, valid, weights); };
  auto history = run_training(cfg, s.hooks(train_epoch, validate));
  return {std::move(s.bundle), std::move(history)};
}

double reconstruction_mse(const ModelBundle<float>& bundle, const signal::WindowDataset& windows) {
  if (bundle.task != ModelTask::AE) throw ConfigError("reconstruction needs an autoencoder");
  check_layout(windows, bundle.config, "evaluation");
  if (windows.empty()) throw ConfigError("reconstruction error of an empty dataset");
  constexpr std::size_t kChunk = 64;
  const std::size_t n = windows.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    std::vector<std::size_t> idx(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    Tape<float> tape(false);
    Rng unused(0);
    const auto x = models::stack_windows<float>(windows, idx);
    const auto h = models::extract_features(tape, bundle.extractor, bundle.config, x, models::Mode::Eval, unused);
    const auto y = models::decode_autoencoder(tape, bundle.head, bundle.config, h);
    double acc = 0.0;
    const auto xv = x.values();
    const auto yv = y.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double d = static_cast<double>(yv[i]) - static_cast<double>(xv[i]);
      acc += d * d;
    }
    sums[c] = acc;
  });
  const double per = static_cast<double>(windows.channels * windows.window_samples);
  return std::accumulate(sums.begin(), sums.end(), 0.0) / (per * static_cast<double>(n));
}

FitResult fit_autoencoder(const signal::WindowDataset& train, const signal::WindowDataset& valid,
                          const models::ExtractorConfig& model, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  if (train.empty()) throw ConfigError("autoencoder training set is empty");
  if (valid.empty()) throw ConfigError("autoencoder validation set is empty");
  check_layout(train, model, "training");
  check_layout(valid, model, "validation");

  Session s(models::make_bundle<float>(ModelTask::AE, model, cfg.seed), cfg);
  auto train_epoch = [&](std::size_t epoch) {
    const auto order = s.shuffled(train.size());
    double total = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size, ++batch_no) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      Tape<float> tape;
      const auto x = models::stack_windows<float>(train, std::span(order).subspan(lo, hi - lo));
      const auto h = models::extract_features(tape, s.bundle.extractor, model, x, models::Mode::Train, s.dropout_rng);
      const auto y = models::decode_autoencoder(tape, s.bundle.head, model, h);
      const auto loss = nn::mse_loss(tape, y, x);
      check_finite(loss.item(), epoch, batch_no);
      tape.backward(loss);
      s.adam.step();
      total += static_cast<double>(loss.item()) * static_cast<double>(hi - lo);
    }
    return total / static_cast<double>(order.size());
  };
  auto validate = [&] { return reconstruction_mse(s.bundle, valid); };
  auto history = run_training(cfg, s.hooks(train_epoch, validate));
  return {std::move(s.bundle), std::move(history)};
}

}  // namespace tempo::train
