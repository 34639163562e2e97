#include "tempo/eval/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tempo/common/error.hpp"
#include "tempo/common/log.hpp"
#include "tempo/common/random.hpp"
#include "tempo/nn/adam.hpp"
#include "tempo/nn/losses.hpp"
#include "tempo/nn/ops.hpp"

namespace tempo::eval {

namespace {

nn::Tensor<double> standardized(const EmbeddingMatrix& x, std::span<const std::size_t> rows,
                                const ProbeModel& model) {
  nn::Tensor<double> out({rows.size(), x.cols});
  auto v = out.values();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = x.row(rows[r]);
    for (std::size_t j = 0; j < x.cols; ++j) {
      v[r * x.cols + j] = (src[j] - model.feature_mean[j]) / model.feature_scale[j];
    }
  }
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

std::vector<double> ProbeModel::logits(const EmbeddingMatrix& x) const {
  if (x.cols != dim) {
    throw ShapeError("probe expects " + std::to_string(dim) + " features, got " + std::to_string(x.cols));
  }
  std::vector<double> out(x.rows * classes);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    double* z = out.data() + i * classes;
    std::copy(bias.begin(), bias.end(), z);
    for (std::size_t j = 0; j < dim; ++j) {
      const double f = (row[j] - feature_mean[j]) / feature_scale[j];
      const double* w = weights.data() + j * classes;
      for (std::size_t k = 0; k < classes; ++k) z[k] += f * w[k];
    }
  }
  return out;
}

std::vector<std::size_t> ProbeModel::predict(const EmbeddingMatrix& x) const {
  const auto z = logits(x);
  std::vector<std::size_t> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto first = z.begin() + static_cast<std::ptrdiff_t>(i * classes);
    out[i] = static_cast<std::size_t>(std::max_element(first, first + static_cast<std::ptrdiff_t>(classes)) - first);
  }
  return out;
}

std::vector<std::size_t> row_labels(const EmbeddingMatrix& m) {
  std::vector<std::size_t> out;
  out.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (!m.info[i].stage) throw ConfigError("row " + std::to_string(i) + " has no stage label");
    out.push_back(signal::stage_index(*m.info[i].stage));
  }
  return out;
}

ProbeModel fit_linear_probe(const EmbeddingMatrix& x, std::span<const std::size_t> labels,
                            std::span<const double> class_weights, const train::TrainConfig& cfg,
                            const EmbeddingMatrix* valid_x, std::span<const std::size_t> valid_labels,
                            std::size_t n_classes) {
  cfg.validate();
  if (x.rows == 0) throw ConfigError("probe needs at least one training row");
  if (labels.size() != x.rows) throw ShapeError("probe labels do not match the feature rows");
  if (class_weights.size() != n_classes) throw ShapeError("probe needs one class weight per class");
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto y : labels) {
    if (y >= n_classes) throw ConfigError("probe label " + std::to_string(y) + " out of range");
    ++counts[y];
  }
  if (valid_x) {
    if (valid_labels.size() != valid_x->rows) throw ShapeError("validation labels do not match the rows");
    for (auto y : valid_labels) {
      if (y >= n_classes || counts[y] == 0) {
        throw ConfigError("class " + std::to_string(y) + " has no training examples for the probe");
      }
    }
  }

  ProbeModel model;
  model.dim = x.cols;
  model.classes = n_classes;
  model.feature_mean.assign(x.cols, 0.0);
  model.feature_scale.assign(x.cols, 1.0);
  for (std::size_t j = 0; j < x.cols; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) mu += x.row(i)[j];
    mu /= static_cast<double>(x.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) var += (x.row(i)[j] - mu) * (x.row(i)[j] - mu);
    const double sd = std::sqrt(var / static_cast<double>(x.rows));
    model.feature_mean[j] = mu;
    model.feature_scale[j] = sd > 1e-12 ? sd : 1.0;
  }

  nn::Tensor<double> w({x.cols, n_classes}, true);
  nn::Tensor<double> b({n_classes}, true);
  nn::Adam<double> adam({w, b}, cfg.adam());
  Rng rng = make_rng(cfg.seed, 3);

  const auto train_x = standardized(x, all_rows(x.rows), model);
  const std::vector<std::size_t> train_y(labels.begin(), labels.end());
  nn::Tensor<double> val_x;
  std::vector<std::size_t> val_y;
  if (valid_x && valid_x->rows > 0) {
    val_x = standardized(*valid_x, all_rows(valid_x->rows), model);
    val_y.assign(valid_labels.begin(), valid_labels.end());
  } else {
    val_x = train_x;
    val_y = train_y;
  }

  auto sync = [&] {
    model.weights.assign(w.values().begin(), w.values().end());
    model.bias.assign(b.values().begin(), b.values().end());
  };
  std::vector<double> best_w, best_b;
  train::TrainingHooks hooks;
  hooks.train_epoch = [&](std::size_t) {
    std::vector<std::size_t> order = all_rows(x.rows);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const auto idx = std::span<const std::size_t>(order).subspan(lo, hi - lo);
      std::vector<std::size_t> y;
      for (auto i : idx) y.push_back(train_y[i]);
      nn::Tape<double> tape;
      const auto xb = nn::gather_rows(tape, train_x, idx);
      const auto loss =
          nn::weighted_cross_entropy(tape, nn::linear(tape, xb, w, b), std::span<const std::size_t>(y), class_weights);
      if (!std::isfinite(loss.item())) throw Error("non-finite probe loss");
      tape.backward(loss);
      adam.step();
      total += loss.item() * static_cast<double>(hi - lo);
    }
    return total / static_cast<double>(order.size());
  };
  hooks.validate = [&] {
    nn::Tape<double> tape(false);
    return nn::weighted_cross_entropy(tape, nn::linear(tape, val_x, w, b), std::span<const std::size_t>(val_y),
                                      class_weights)
        .item();
  };
  hooks.keep_best = [&] {
    best_w.assign(w.values().begin(), w.values().end());
    best_b.assign(b.values().begin(), b.values().end());
  };
  hooks.restore_best = [&] {
    std::ranges::copy(best_w, w.values().begin());
    std::ranges::copy(best_b, b.values().begin());
  };
  model.history = train::run_training(cfg, hooks);
  sync();
  return model;
}

std::vector<std::size_t> subsample_per_class(std::span<const std::size_t> labels,
                                             std::optional<std::size_t> n_per_class, std::uint64_t seed) {
  if (!n_per_class) return all_rows(labels.size());
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng = make_rng(seed, 4);
  std::vector<std::size_t> out;
  for (auto& [cls, idx] : by_class) {
    if (idx.size() <= *n_per_class) {
      if (idx.size() < *n_per_class) {
        log_info("class {} has {} examples, fewer than the {} requested; using all", cls, idx.size(), *n_per_class);
      }
      out.insert(out.end(), idx.begin(), idx.end());
      continue;
    }
    // Partial Fisher-Yates: the first n positions become a uniform sample.
    for (std::size_t k = 0; k < *n_per_class; ++k) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(k, idx.size() - 1)(rng);
      std::swap(idx[k], idx[j]);
    }
    out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(*n_per_class));
  }
  std::ranges::sort(out);
  return out;
}

}  // namespace tempo::eval
