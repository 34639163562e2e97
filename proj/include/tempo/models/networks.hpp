#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "tempo/common/random.hpp"
#include "tempo/models/parameters.hpp"
#include "tempo/nn/tensor.hpp"
#include "tempo/signal/windows.hpp"

namespace tempo::models {

enum class ModelTask { RP, TS, AE, Supervised };

std::string_view task_name(ModelTask task);
/// Accepts "rp", "ts", "ae", "supervised" in any case.
ModelTask task_from_name(std::string_view name);

struct ExtractorConfig {
  std::size_t channels = 2;
  std::size_t window_samples = 3000;
  std::size_t kernel = 50;
  std::size_t pool = 13;
  std::size_t embed_dim = 100;
  double dropout = 0.5;

  /// Length of the time axis after both pooling stages.
  std::size_t pooled_length() const noexcept { return window_samples / pool / pool; }
  std::size_t flat_features() const noexcept { return channels * 8 * pooled_length(); }
  /// Throws ConfigError when the pooled length is 0, kernel > T, D == 0 or dropout is outside [0, 1).
  void validate() const;
};

bool operator==(const ExtractorConfig& a, const ExtractorConfig& b);

inline constexpr std::size_t kFeatureMaps = 8;
inline constexpr std::size_t kStageClasses = 5;

/// Extractor parameters plus the task head.
///   RP:  contrast.weight [D, 1],  contrast.bias [1]
///   TS:  contrast.weight [2D, 1], contrast.bias [1]
///   AE:  decoder.fc / decoder.conv1 / decoder.conv2 / decoder.out
///   Supervised: softmax.weight [D, 5], softmax.bias [5]
template <typename T>
struct ModelBundle {
  ModelTask task = ModelTask::RP;
  ExtractorConfig config;
  ParameterSet<T> extractor;
  ParameterSet<T> head;

  std::vector<nn::Tensor<T>> parameters() const;
  std::size_t parameter_count() const { return extractor.parameter_count() + head.parameter_count(); }
  ModelBundle clone() const { return {task, config, extractor.clone(), head.clone()}; }
};

/// Fresh bundle; every tensor initialized uniformly in +-sqrt(1/fan_in) from `seed`.
template <typename T>
ModelBundle<T> make_bundle(ModelTask task, const ExtractorConfig& config, std::uint64_t seed);

template <typename To, typename From>
ModelBundle<To> convert_bundle(const ModelBundle<From>& from);

/// Copies extractor values from `from` into `to`.
template <typename T>
void copy_extractor(const ModelBundle<T>& from, ModelBundle<T>& to);
/// Copies head values; throws ShapeError when the heads have different layouts.
template <typename T>
void copy_head(const ModelBundle<T>& from, ModelBundle<T>& to);

enum class Mode { Train, Eval };

/// batch [B, C, T] -> embedding [B, D].
template <typename T>
nn::Tensor<T> extract_features(nn::Tape<T>& tape, const ParameterSet<T>& extractor, const ExtractorConfig& config,
                               const nn::Tensor<T>& batch, Mode mode, Rng& rng);

/// |h1 - h2|
template <typename T>
nn::Tensor<T> contrast_rp(nn::Tape<T>& tape, const nn::Tensor<T>& h1, const nn::Tensor<T>& h2);

/// (|h1 - h2|, |h2 - h3|)
template <typename T>
nn::Tensor<T> contrast_ts(nn::Tape<T>& tape, const nn::Tensor<T>& h1, const nn::Tensor<T>& h2,
                          const nn::Tensor<T>& h3);

/// g [B, G] -> scores [B] = g w + w0
template <typename T>
nn::Tensor<T> pretext_score(nn::Tape<T>& tape, const nn::Tensor<T>& g, const nn::Tensor<T>& weight,
                            const nn::Tensor<T>& bias);

/// Sign of a score with 0 mapped to +1.
inline int predict_label(double score) noexcept { return score >= 0.0 ? 1 : -1; }

/// embedding [B, D] -> reconstruction [B, C, T]
template <typename T>
nn::Tensor<T> decode_autoencoder(nn::Tape<T>& tape, const ParameterSet<T>& decoder, const ExtractorConfig& config,
                                 const nn::Tensor<T>& embedding);

/// embedding [B, D] -> logits [B, 5]
template <typename T>
nn::Tensor<T> supervised_logits(nn::Tape<T>& tape, const ParameterSet<T>& head, const nn::Tensor<T>& embedding);

/// Gathers the listed windows into a [B, C, T] tensor.
template <typename T>
nn::Tensor<T> stack_windows(const signal::WindowDataset& ds, std::span<const std::size_t> indices);

/// Eval-mode embeddings [N, D] of the listed windows, computed in parallel chunks.
/// Results do not depend on the thread count.
nn::Tensor<float> embed_windows(const ParameterSet<float>& extractor, const ExtractorConfig& config,
                                const signal::WindowDataset& ds, std::span<const std::size_t> indices);

}  // namespace tempo::models
