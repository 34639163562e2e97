#include "tempo/models/networks.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include "tempo/common/error.hpp"
#include "tempo/common/parallel.hpp"
#include "tempo/nn/ops.hpp"

namespace tempo::models {

std::string_view task_name(ModelTask task) {
  switch (task) {
    case ModelTask::RP: return "rp";
    case ModelTask::TS: return "ts";
    case ModelTask::AE: return "ae";
    case ModelTask::Supervised: return "supervised";
  }
  return "?";
}

ModelTask task_from_name(std::string_view name) {
  std::string s(name);
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "rp") return ModelTask::RP;
  if (s == "ts") return ModelTask::TS;
  if (s == "ae") return ModelTask::AE;
  if (s == "supervised") return ModelTask::Supervised;
  throw ConfigError("unknown model task '" + std::string(name) + "' (expected rp, ts, ae or supervised)");
}

void ExtractorConfig::validate() const {
  if (channels == 0) throw ConfigError("extractor: channels must be positive");
  if (kernel == 0 || pool == 0) throw ConfigError("extractor: kernel and pool sizes must be positive");
  if (kernel > window_samples) throw ConfigError("extractor: kernel longer than the window");
  if (pooled_length() < 1) {
    throw ConfigError("extractor: window of " + std::to_string(window_samples) + " samples is too short for two " +
                      std::to_string(pool) + "-sample poolings");
  }
  if (embed_dim == 0) throw ConfigError("extractor: embedding dimension must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("extractor: dropout must lie in [0, 1)");
}

bool operator==(const ExtractorConfig& a, const ExtractorConfig& b) {
  return a.channels == b.channels && a.window_samples == b.window_samples && a.kernel == b.kernel &&
         a.pool == b.pool && a.embed_dim == b.embed_dim && a.dropout == b.dropout;
}

template <typename T>
std::vector<nn::Tensor<T>> ModelBundle<T>::parameters() const {
  auto out = extractor.tensors();
  for (auto& t : head.tensors()) out.push_back(t);
  return out;
}

template <typename T>
ModelBundle<T> make_bundle(ModelTask task, const ExtractorConfig& config, std::uint64_t seed) {
  config.validate();
  ModelBundle<T> b;
  b.task = task;
  b.config = config;
  Rng rng = make_rng(seed, 0x5eed);
  const std::size_t C = config.channels, k = config.kernel, D = config.embed_dim, F = config.flat_features();
  const std::size_t M = kFeatureMaps;

  b.extractor.add("spatial.weight", {C, 1, C, 1}, C, rng);
  b.extractor.add("spatial.bias", {C}, C, rng);
  b.extractor.add("conv1.weight", {M, 1, 1, k}, k, rng);
  b.extractor.add("conv1.bias", {M}, k, rng);
  b.extractor.add("conv2.weight", {M, M, 1, k}, M * k, rng);
  b.extractor.add("conv2.bias", {M}, M * k, rng);
  b.extractor.add("fc.weight", {F, D}, F, rng);
  b.extractor.add("fc.bias", {D}, F, rng);

  switch (task) {
    case ModelTask::RP:
    case ModelTask::TS: {
      const std::size_t G = task == ModelTask::RP ? D : 2 * D;
      b.head.add("contrast.weight", {G, 1}, G, rng);
      b.head.add("contrast.bias", {1}, G, rng);
      break;
    }
    case ModelTask::AE: {
      const std::size_t L = config.pooled_length();
      b.head.add("decoder.fc.weight", {D, M * C * L}, D, rng);
      b.head.add("decoder.fc.bias", {M * C * L}, D, rng);
      b.head.add("decoder.conv1.weight", {M, M, 1, k}, M * k, rng);
      b.head.add("decoder.conv1.bias", {M}, M * k, rng);
      b.head.add("decoder.conv2.weight", {M, M, 1, k}, M * k, rng);
      b.head.add("decoder.conv2.bias", {M}, M * k, rng);
      b.head.add("decoder.out.weight", {1, M, 1, k}, M * k, rng);
      b.head.add("decoder.out.bias", {1}, M * k, rng);
      break;
    }
    case ModelTask::Supervised:
      // Zero-initialized: the untrained classifier predicts uniform class probabilities.
      std::ranges::fill(b.head.add("softmax.weight", {D, kStageClasses}, D, rng).values(), T{0});
      std::ranges::fill(b.head.add("softmax.bias", {kStageClasses}, D, rng).values(), T{0});
      break;
  }
  return b;
}

template <typename To, typename From>
ModelBundle<To> convert_bundle(const ModelBundle<From>& from) {
  return {from.task, from.config, convert_parameters<To>(from.extractor), convert_parameters<To>(from.head)};
}

template <typename T>
void copy_extractor(const ModelBundle<T>& from, ModelBundle<T>& to) {
  if (!(from.config == to.config)) throw ShapeError("extractor configurations differ");
  to.extractor.assign(from.extractor);
}

template <typename T>
void copy_head(const ModelBundle<T>& from, ModelBundle<T>& to) {
  if (from.task != to.task) {
    throw ShapeError("head dimension mismatch: a " + std::string(task_name(from.task)) + " head cannot serve a " +
                     std::string(task_name(to.task)) + " model");
  }
  to.head.assign(from.head);
}

template <typename T>
nn::Tensor<T> extract_features(nn::Tape<T>& tape, const ParameterSet<T>& p, const ExtractorConfig& config,
                               const nn::Tensor<T>& batch, Mode mode, Rng& rng) {
  const std::size_t C = config.channels, W = config.window_samples;
  if (batch.rank() != 3 || batch.dim(1) != C || batch.dim(2) != W) {
    throw ShapeError("extractor expects [B, " + std::to_string(C) + ", " + std::to_string(W) + "], got " +
                     nn::shape_str(batch.shape()));
  }
  const std::size_t B = batch.dim(0);
  constexpr std::array<std::size_t, 4> kChannelsToHeight{0, 2, 1, 3};

  auto x = nn::reshape(tape, batch, {B, 1, C, W});
  x = nn::conv2d(tape, x, p.at("spatial.weight"), p.at("spatial.bias"), nn::Padding::Valid);  // [B, C, 1, T]
  x = nn::permute(tape, x, std::span<const std::size_t>(kChannelsToHeight));                   // [B, 1, C, T]
  x = nn::conv2d(tape, x, p.at("conv1.weight"), p.at("conv1.bias"), nn::Padding::Same);
  x = nn::relu(tape, x);
  x = nn::maxpool2d(tape, x, 1, config.pool);
  x = nn::conv2d(tape, x, p.at("conv2.weight"), p.at("conv2.bias"), nn::Padding::Same);
  x = nn::relu(tape, x);
  x = nn::maxpool2d(tape, x, 1, config.pool);
  x = nn::reshape(tape, x, {B, config.flat_features()});
  x = nn::dropout(tape, x, config.dropout, mode == Mode::Train, rng);
  return nn::linear(tape, x, p.at("fc.weight"), p.at("fc.bias"));
}

template <typename T>
nn::Tensor<T> contrast_rp(nn::Tape<T>& tape, const nn::Tensor<T>& h1, const nn::Tensor<T>& h2) {
  if (h1.shape() != h2.shape()) {
    throw ShapeError("contrast_rp: " + nn::shape_str(h1.shape()) + " vs " + nn::shape_str(h2.shape()));
  }
  return nn::abs(tape, nn::sub(tape, h1, h2));
}

template <typename T>
nn::Tensor<T> contrast_ts(nn::Tape<T>& tape, const nn::Tensor<T>& h1, const nn::Tensor<T>& h2,
                          const nn::Tensor<T>& h3) {
  if (h1.shape() != h2.shape() || h2.shape() != h3.shape()) {
    throw ShapeError("contrast_ts: " + nn::shape_str(h1.shape()) + ", " + nn::shape_str(h2.shape()) + ", " +
                     nn::shape_str(h3.shape()));
  }
  return nn::concat_columns(tape, nn::abs(tape, nn::sub(tape, h1, h2)), nn::abs(tape, nn::sub(tape, h2, h3)));
}

template <typename T>
nn::Tensor<T> pretext_score(nn::Tape<T>& tape, const nn::Tensor<T>& g, const nn::Tensor<T>& weight,
                            const nn::Tensor<T>& bias) {
  if (g.rank() != 2 || weight.rank() != 2 || weight.dim(0) != g.dim(1) || weight.dim(1) != 1 || bias.size() != 1) {
    throw ShapeError("pretext_score: features " + nn::shape_str(g.shape()) + ", weight " +
                     nn::shape_str(weight.shape()) + ", bias " + nn::shape_str(bias.shape()));
  }
  return nn::reshape(tape, nn::linear(tape, g, weight, bias), {g.dim(0)});
}

template <typename T>
nn::Tensor<T> decode_autoencoder(nn::Tape<T>& tape, const ParameterSet<T>& p, const ExtractorConfig& config,
                                 const nn::Tensor<T>& embedding) {
  if (embedding.rank() != 2 || embedding.dim(1) != config.embed_dim) {
    throw ShapeError("decoder expects [B, " + std::to_string(config.embed_dim) + "], got " +
                     nn::shape_str(embedding.shape()));
  }
  const std::size_t B = embedding.dim(0), C = config.channels, L = config.pooled_length();
  auto x = nn::linear(tape, embedding, p.at("decoder.fc.weight"), p.at("decoder.fc.bias"));
  x = nn::reshape(tape, x, {B, kFeatureMaps, C, L});
  x = nn::upsample_last(tape, x, config.pool);
  x = nn::relu(tape, nn::conv2d(tape, x, p.at("decoder.conv1.weight"), p.at("decoder.conv1.bias"), nn::Padding::Same));
  x = nn::upsample_last(tape, x, config.pool);
  x = nn::relu(tape, nn::conv2d(tape, x, p.at("decoder.conv2.weight"), p.at("decoder.conv2.bias"), nn::Padding::Same));
  x = nn::resize_last(tape, x, config.window_samples);
  x = nn::conv2d(tape, x, p.at("decoder.out.weight"), p.at("decoder.out.bias"), nn::Padding::Same);
  return nn::reshape(tape, x, {B, C, config.window_samples});
}

template <typename T>
nn::Tensor<T> supervised_logits(nn::Tape<T>& tape, const ParameterSet<T>& p, const nn::Tensor<T>& embedding) {
  const auto& w = p.at("softmax.weight");
  if (embedding.rank() != 2 || embedding.dim(1) != w.dim(0)) {
    throw ShapeError("softmax head expects [B, " + std::to_string(w.dim(0)) + "], got " +
                     nn::shape_str(embedding.shape()));
  }
  return nn::linear(tape, embedding, w, p.at("softmax.bias"));
}

template <typename T>
nn::Tensor<T> stack_windows(const signal::WindowDataset& ds, std::span<const std::size_t> indices) {
  const std::size_t per = ds.channels * ds.window_samples;
  nn::Tensor<T> out({indices.size(), ds.channels, ds.window_samples});
  auto dst = out.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& w = ds.windows.at(indices[i]).data;
    if (w.size() != per) throw ShapeError("window " + std::to_string(indices[i]) + " has the wrong size");
    std::copy(w.begin(), w.end(), dst.begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return out;
}

nn::Tensor<float> embed_windows(const ParameterSet<float>& extractor, const ExtractorConfig& config,
                                const signal::WindowDataset& ds, std::span<const std::size_t> indices) {
  if (ds.channels != config.channels || ds.window_samples != config.window_samples) {
    throw ShapeError("windows are " + std::to_string(ds.channels) + " x " + std::to_string(ds.window_samples) +
                     " but the model expects " + std::to_string(config.channels) + " x " +
                     std::to_string(config.window_samples));
  }
  constexpr std::size_t kChunk = 64;
  const std::size_t n = indices.size(), D = config.embed_dim;
  nn::Tensor<float> out({n, D});
  auto dst = out.values();
  parallel_for((n + kChunk - 1) / kChunk, [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    nn::Tape<float> tape(false);
    Rng unused(0);
    const auto batch = stack_windows<float>(ds, indices.subspan(lo, hi - lo));
    const auto h = extract_features(tape, extractor, config, batch, Mode::Eval, unused);
    std::ranges::copy(h.values(), dst.begin() + static_cast<std::ptrdiff_t>(lo * D));
  });
  return out;
}

#define TEMPO_INSTANTIATE_NETWORKS(T)                                                                               \
  template struct ModelBundle<T>;                                                                                   \
  template ModelBundle<T> make_bundle<T>(ModelTask, const ExtractorConfig&, std::uint64_t);                         \
  template void copy_extractor<T>(const ModelBundle<T>&, ModelBundle<T>&);                                          \
  template void copy_head<T>(const ModelBundle<T>&, ModelBundle<T>&);                                               \
  template nn::Tensor<T> extract_features<T>(nn::Tape<T>&, const ParameterSet<T>&, const ExtractorConfig&,          \
                                             const nn::Tensor<T>&, Mode, Rng&);                                     \
  template nn::Tensor<T> contrast_rp<T>(nn::Tape<T>&, const nn::Tensor<T>&, const nn::Tensor<T>&);                  \
  template nn::Tensor<T> contrast_ts<T>(nn::Tape<T>&, const nn::Tensor<T>&, const nn::Tensor<T>&,                   \
                                        const nn::Tensor<T>&);                                                      \
  template nn::Tensor<T> pretext_score<T>(nn::Tape<T>&, const nn::Tensor<T>&, const nn::Tensor<T>&,                 \
                                          const nn::Tensor<T>&);                                                    \
  template nn::Tensor<T> decode_autoencoder<T>(nn::Tape<T>&, const ParameterSet<T>&, const ExtractorConfig&,        \
                                               const nn::Tensor<T>&);                                               \
  template nn::Tensor<T> supervised_logits<T>(nn::Tape<T>&, const ParameterSet<T>&, const nn::Tensor<T>&);          \
  template nn::Tensor<T> stack_windows<T>(const signal::WindowDataset&, std::span<const std::size_t>);

TEMPO_INSTANTIATE_NETWORKS(float)
TEMPO_INSTANTIATE_NETWORKS(double)

template ModelBundle<float> convert_bundle<float, double>(const ModelBundle<double>&);
template ModelBundle<double> convert_bundle<double, float>(const ModelBundle<float>&);

}  // namespace tempo::models
