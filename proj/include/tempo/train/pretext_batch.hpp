#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tempo/models/networks.hpp"
#include "tempo/nn/tensor.hpp"
#include "tempo/ssl/sampling.hpp"

namespace tempo::train {

/// One batch of pretext examples expressed over its distinct windows, so each
/// window passes through the shared extractor once.
struct PretextBatch {
  std::vector<std::size_t> windows;              // distinct, sorted
  std::vector<std::size_t> first, middle, last;  // rows into `windows`; middle unused for RP
  std::vector<int> labels;
};

PretextBatch make_pretext_batch(const ssl::PretextDataset& data, std::span<const std::size_t> examples);

/// Scores [B] of a batch given the embeddings [W, D] of its distinct windows.
template <typename T>
nn::Tensor<T> batch_scores(nn::Tape<T>& tape, const models::ModelBundle<T>& bundle, const nn::Tensor<T>& h,
                           const PretextBatch& batch, ssl::PretextTask task);

}  // namespace tempo::train
