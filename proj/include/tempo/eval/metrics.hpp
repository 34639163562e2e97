#pragma once

#include <concepts>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "tempo/common/error.hpp"

namespace tempo::eval {

/// Mean recall over the classes present in `labels`.
template <std::integral L>
double balanced_accuracy(std::span<const L> predictions, std::span<const L> labels) {
  if (labels.empty()) throw ConfigError("balanced accuracy of an empty set");
  if (predictions.size() != labels.size()) throw ShapeError("predictions and labels differ in length");
  std::map<L, std::pair<std::size_t, std::size_t>> per_class;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [correct, total] = per_class[labels[i]];
    ++total;
    correct += predictions[i] == labels[i];
  }
  double sum = 0.0;
  for (const auto& [cls, ct] : per_class) sum += static_cast<double>(ct.first) / static_cast<double>(ct.second);
  return sum / static_cast<double>(per_class.size());
}

template <std::integral L>
double balanced_accuracy(const std::vector<L>& predictions, const std::vector<L>& labels) {
  return balanced_accuracy(std::span<const L>(predictions), std::span<const L>(labels));
}

}  // namespace tempo::eval
