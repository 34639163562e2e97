#include "tempo/nn/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tempo/common/error.hpp"

namespace tempo::nn {

template <typename T>
Tensor<T> binary_logistic_loss(Tape<T>& tape, const Tensor<T>& scores, std::span<const int> labels) {
  const std::size_t B = scores.size();
  if (labels.size() != B) throw ShapeError("binary_logistic_loss: label count does not match scores");
  if (B == 0) throw ShapeError("binary_logistic_loss: empty batch");
  const auto s = scores.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw ConfigError("binary labels must be -1 or +1");
    const double z = labels[i] * static_cast<double>(s[i]);
    acc += std::log1p(std::exp(-std::abs(z))) + std::max(0.0, -z);
  }
  const bool tracked = tape.tracks({&scores});
  Tensor<T> out(Shape{1}, std::vector<T>{static_cast<T>(acc / static_cast<double>(B))}, tracked);
  if (tracked) {
    tape.record([=, labels = std::vector<int>(labels.begin(), labels.end())]() {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      const auto sv = scores.values();
      auto gs = scores.grad();
      for (std::size_t i = 0; i < B; ++i) {
        const double z = labels[i] * static_cast<double>(sv[i]);
        // d/ds softplus(-y s) = -y * sigmoid(-z)
        const double sig = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
        gs[i] += static_cast<T>(g * (-labels[i]) * sig / static_cast<double>(B));
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> weighted_cross_entropy(Tape<T>& tape, const Tensor<T>& logits, std::span<const std::size_t> targets,
                                 std::span<const double> class_weights) {
  if (logits.rank() != 2) throw ShapeError("weighted_cross_entropy expects logits [B, K]");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  if (targets.size() != B) throw ShapeError("weighted_cross_entropy: target count does not match batch");
  if (class_weights.size() != K) throw ShapeError("weighted_cross_entropy: need one weight per class");
  if (B == 0) throw ShapeError("weighted_cross_entropy: empty batch");
  for (double w : class_weights) {
    if (!(w > 0.0)) throw ConfigError("class weights must be positive");
  }
  const auto l = logits.values();
  std::vector<double> probs(B * K);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    if (targets[i] >= K) {
      throw ConfigError("target index " + std::to_string(targets[i]) + " out of range for " + std::to_string(K) +
                        " classes");
    }
    const T* row = l.data() + i * K;
    const double mx = *std::max_element(row, row + K);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      probs[i * K + k] = std::exp(static_cast<double>(row[k]) - mx);
      z += probs[i * K + k];
    }
    for (std::size_t k = 0; k < K; ++k) probs[i * K + k] /= z;
    const double lse = mx + std::log(z);
    const double w = class_weights[targets[i]];
    num += w * (lse - static_cast<double>(row[targets[i]]));
    den += w;
  }
  const bool tracked = tape.tracks({&logits});
  Tensor<T> out(Shape{1}, std::vector<T>{static_cast<T>(num / den)}, tracked);
  if (tracked) {
    tape.record([=, probs = std::move(probs), targets = std::vector<std::size_t>(targets.begin(), targets.end()),
                 weights = std::vector<double>(class_weights.begin(), class_weights.end())]() {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      auto gl = logits.grad();
      for (std::size_t i = 0; i < B; ++i) {
        const double scale = g * weights[targets[i]] / den;
        for (std::size_t k = 0; k < K; ++k) {
          const double onehot = k == targets[i] ? 1.0 : 0.0;
          gl[i * K + k] += static_cast<T>(scale * (probs[i * K + k] - onehot));
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mse_loss(Tape<T>& tape, const Tensor<T>& prediction, const Tensor<T>& target) {
  if (prediction.shape() != target.shape()) {
    throw ShapeError("mse_loss: prediction " + shape_str(prediction.shape()) + " vs target " +
                     shape_str(target.shape()));
  }
  const auto p = prediction.values();
  const auto t = target.values();
  const std::size_t n = p.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    acc += d * d;
  }
  const bool tracked = tape.tracks({&prediction});
  Tensor<T> out(Shape{1}, std::vector<T>{static_cast<T>(acc / static_cast<double>(n))}, tracked);
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      const auto pv = prediction.values();
      const auto tv = target.values();
      auto gp = prediction.grad();
      const double scale = 2.0 * g / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) gp[i] += static_cast<T>(scale * (static_cast<double>(pv[i]) - tv[i]));
    });
  }
  return out;
}

template Tensor<float> binary_logistic_loss(Tape<float>&, const Tensor<float>&, std::span<const int>);
template Tensor<double> binary_logistic_loss(Tape<double>&, const Tensor<double>&, std::span<const int>);
template Tensor<float> weighted_cross_entropy(Tape<float>&, const Tensor<float>&, std::span<const std::size_t>,
                                              std::span<const double>);
template Tensor<double> weighted_cross_entropy(Tape<double>&, const Tensor<double>&, std::span<const std::size_t>,
                                               std::span<const double>);
template Tensor<float> mse_loss(Tape<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> mse_loss(Tape<double>&, const Tensor<double>&, const Tensor<double>&);

}  // namespace tempo::nn
