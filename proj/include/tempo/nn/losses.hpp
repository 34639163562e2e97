#pragma once

#include <cstddef>
#include <span>

#include "tempo/nn/tensor.hpp"

namespace tempo::nn {

/// Mean over the batch of log(1 + exp(-y * score)), y in {-1, +1}.
/// Evaluated as log1p(exp(-|z|)) + max(0, -z) with z = y * score, which stays
/// finite for any finite score.
template <typename T>
Tensor<T> binary_logistic_loss(Tape<T>& tape, const Tensor<T>& scores, std::span<const int> labels);

/// Class-weighted multinomial cross-entropy:
///   sum_i w[t_i] * (logsumexp(logits_i) - logits_i[t_i]) / sum_i w[t_i]
template <typename T>
Tensor<T> weighted_cross_entropy(Tape<T>& tape, const Tensor<T>& logits, std::span<const std::size_t> targets,
                                 std::span<const double> class_weights);

/// Mean squared error against a constant target of identical shape.
template <typename T>
Tensor<T> mse_loss(Tape<T>& tape, const Tensor<T>& prediction, const Tensor<T>& target);

}  // namespace tempo::nn
