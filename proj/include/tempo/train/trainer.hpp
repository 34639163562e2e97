#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "tempo/models/checkpoint.hpp"
#include "tempo/models/networks.hpp"
#include "tempo/nn/adam.hpp"
#include "tempo/signal/windows.hpp"
#include "tempo/ssl/sampling.hpp"

namespace tempo::train {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 300;
  std::size_t patience_epochs = 30;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;

  void validate() const;
  nn::AdamOptions adam() const { return {lr, beta1, beta2, 1e-8}; }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  double best_valid_loss = std::numeric_limits<double>::infinity();

  /// `epoch,train_loss,valid_loss,seconds`; the seconds column is left empty
  /// unless requested so that reruns produce identical files.
  void write_csv(std::ostream& out, bool with_seconds = false) const;
  models::TrainingSummary summary() const;
};

/// Tracks the best validation loss; any strictly lower loss is an improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when `loss` improves on the best so far.
  bool update(std::size_t epoch, double loss);
  /// True once `patience` epochs have passed without improvement.
  bool should_stop(std::size_t epoch) const noexcept { return best_epoch_ > 0 && epoch >= best_epoch_ + patience_; }

  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

/// Generic epoch loop with early stopping. `train_epoch(epoch)` returns the
/// mean training loss, `validate()` the validation loss. `keep_best()` is
/// called after each improving epoch and `restore_best()` once at the end.
struct TrainingHooks {
  std::function<double(std::size_t)> train_epoch;
  std::function<double()> validate;
  std::function<void()> keep_best;
  std::function<void()> restore_best;
};

TrainHistory run_training(const TrainConfig& cfg, const TrainingHooks& hooks);

struct FitResult {
  models::ModelBundle<float> bundle;
  TrainHistory history;
};

/// Pretext training with the binary logistic loss. `init` optionally supplies
/// the starting parameters (otherwise a fresh bundle seeded from cfg.seed).
FitResult fit_pretext(const signal::WindowDataset& train_windows, const ssl::PretextDataset& train,
                      const signal::WindowDataset& valid_windows, const ssl::PretextDataset& valid,
                      const models::ExtractorConfig& model, const TrainConfig& cfg,
                      const models::ModelBundle<float>* init = nullptr);

/// Mean pretext loss and scores in eval mode.
double pretext_loss(const models::ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                    const ssl::PretextDataset& data);
std::vector<double> pretext_scores(const models::ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                                   const ssl::PretextDataset& data);

/// N / (K * N_c) for each of the K classes present; classes without examples get 1.
std::vector<double> compute_class_weights(std::span<const std::size_t> labels, std::size_t n_classes);

/// Stage indices of every window; throws when a window is unlabeled.
std::vector<std::size_t> stage_labels(const signal::WindowDataset& ds);

/// Extractor and softmax head trained jointly on the weighted cross-entropy.
/// Every class present in `valid` must also be present in `train`.
FitResult fit_supervised(const signal::WindowDataset& train, const signal::WindowDataset& valid,
                         const models::ExtractorConfig& model, const TrainConfig& cfg,
                         std::optional<std::vector<double>> class_weights = std::nullopt);

double supervised_loss(const models::ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                       std::span<const double> class_weights);

/// Extractor plus decoder trained on the reconstruction MSE.
FitResult fit_autoencoder(const signal::WindowDataset& train, const signal::WindowDataset& valid,
                          const models::ExtractorConfig& model, const TrainConfig& cfg);

/// Mean reconstruction MSE in eval mode.
double reconstruction_mse(const models::ModelBundle<float>& bundle, const signal::WindowDataset& windows);

}  // namespace tempo::train
