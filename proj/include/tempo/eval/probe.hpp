#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tempo/eval/embedding.hpp"
#include "tempo/train/trainer.hpp"

namespace tempo::eval {

/// Multinomial linear classifier over (standardized) features. Class order is
/// the fixed stage order W, N1, N2, N3, R.
struct ProbeModel {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> weights;  // dim x classes
  std::vector<double> bias;     // classes
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  train::TrainHistory history;

  /// Row-wise logits of standardized inputs, n x classes.
  std::vector<double> logits(const EmbeddingMatrix& x) const;
  std::vector<std::size_t> predict(const EmbeddingMatrix& x) const;
};

/// Weighted multinomial logistic regression trained with Adam on (weights, bias)
/// only, early-stopped on the validation rows (the training rows when none are
/// given). Features are standardized with statistics of the training rows;
/// the inputs themselves are left untouched.
ProbeModel fit_linear_probe(const EmbeddingMatrix& x, std::span<const std::size_t> labels,
                            std::span<const double> class_weights, const train::TrainConfig& cfg,
                            const EmbeddingMatrix* valid_x = nullptr,
                            std::span<const std::size_t> valid_labels = {},
                            std::size_t n_classes = 5);

/// Stage index of every row; throws for unlabeled rows.
std::vector<std::size_t> row_labels(const EmbeddingMatrix& m);

/// min(n, available) rows of every class, drawn without replacement; all rows
/// when `n_per_class` is empty. Returned indices are sorted.
std::vector<std::size_t> subsample_per_class(std::span<const std::size_t> labels,
                                             std::optional<std::size_t> n_per_class, std::uint64_t seed);

}  // namespace tempo::eval
