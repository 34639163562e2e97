#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tempo/eval/probe.hpp"
#include "tempo/models/networks.hpp"
#include "tempo/signal/windows.hpp"
#include "tempo/ssl/sampling.hpp"
#include "tempo/train/trainer.hpp"

namespace tempo::eval {

struct SubjectSplits {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
};

/// Throws ConfigError naming the first subject found in two splits.
void check_disjoint(const SubjectSplits& splits);

/// Same check on the subjects actually present in three datasets.
void check_disjoint(const signal::WindowDataset& train, const signal::WindowDataset& valid,
                    const signal::WindowDataset& test);

enum class Method { RP, TS, AE, RandInit, Supervised, Handcrafted };

std::string_view method_name(Method m);
/// "rp", "ts", "ae", "rand", "supervised", "handcrafted".
Method method_from_name(std::string_view name);

struct CurveRow {
  std::string method;
  std::optional<std::size_t> n_per_class;  // empty = ALL
  std::uint64_t seed = 0;
  double balanced_accuracy = 0.0;
};

struct CurveInputs {
  const signal::WindowDataset* train = nullptr;
  const signal::WindowDataset* valid = nullptr;
  const signal::WindowDataset* test = nullptr;
  /// Frozen extractors for RP, TS, AE and RandInit.
  std::map<Method, const models::ModelBundle<float>*> bundles;
  models::ExtractorConfig model;
  train::TrainConfig probe;
  train::TrainConfig supervised;
};

/// One row per (method, budget, seed) in that nesting order. Frozen methods
/// embed every split once and fit a probe per cell; `supervised` trains the
/// whole network on each budgeted subset.
std::vector<CurveRow> run_lowdata_curve(std::span<const Method> methods,
                                        std::span<const std::optional<std::size_t>> budgets, std::size_t n_seeds,
                                        const CurveInputs& inputs, std::uint64_t base_seed);

/// `method,n_per_class,seed,balanced_accuracy`; ALL budgets print as "ALL".
void write_curve_csv(std::span<const CurveRow> rows, std::ostream& out);

struct SweepRow {
  double tau_pos_s = 0.0;
  double tau_neg_s = 0.0;
  double bal_acc_ssl = 0.0;
  double bal_acc_staging = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<models::ModelBundle<float>> bundles;
  std::vector<train::TrainHistory> histories;
};

struct SweepInputs {
  const signal::WindowDataset* train = nullptr;
  const signal::WindowDataset* valid = nullptr;
  const signal::WindowDataset* test = nullptr;
  ssl::SamplerConfig sampler;  // tau values are replaced per row
  models::ExtractorConfig model;
  train::TrainConfig pretext;
  train::TrainConfig probe;
};

/// Pretext balanced accuracy on test-subject tuples and downstream probe
/// balanced accuracy (all labeled training windows) for each (tau_pos, tau_neg).
SweepResult run_tau_sweep(std::span<const std::pair<double, double>> tau_pairs, ssl::PretextTask task,
                          const SweepInputs& inputs);

/// Balanced accuracy of sign(score) (0 counts as +1) against the tuple labels.
double pretext_balanced_accuracy(const models::ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                                 const ssl::PretextDataset& data);

/// Probe on frozen features: fit on train (all labels) with valid for early
/// stopping, report test balanced accuracy.
double probe_balanced_accuracy(const EmbeddingMatrix& train, const EmbeddingMatrix& valid,
                               const EmbeddingMatrix& test, const train::TrainConfig& cfg,
                               std::optional<std::size_t> n_per_class = std::nullopt, std::uint64_t seed = 0);

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);

/// Windows that carry a stage label.
signal::WindowDataset labeled_subset(const signal::WindowDataset& ds);

/// Pretext tuples for a split, seeded per split so the three splits differ.
ssl::PretextDataset sample_pretext(const signal::WindowDataset& ds, ssl::PretextTask task,
                                   const ssl::SamplerConfig& cfg);

}  // namespace tempo::eval
