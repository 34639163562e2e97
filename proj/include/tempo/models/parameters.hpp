#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tempo/common/random.hpp"
#include "tempo/nn/tensor.hpp"

namespace tempo::models {

template <typename T>
struct NamedTensor {
  std::string name;
  nn::Tensor<T> tensor;
};

/// Ordered, named collection of trainable tensors.
template <typename T>
class ParameterSet {
 public:
  /// New tensor drawn uniformly from +-sqrt(1 / fan_in).
  const nn::Tensor<T>& add(std::string name, nn::Shape shape, std::size_t fan_in, Rng& rng);
  /// Takes the handle as is (no copy).
  const nn::Tensor<T>& insert(std::string name, nn::Tensor<T> tensor);

  bool contains(std::string_view name) const noexcept;
  const nn::Tensor<T>& at(std::string_view name) const;

  const std::vector<NamedTensor<T>>& entries() const noexcept { return entries_; }
  std::vector<nn::Tensor<T>> tensors() const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t parameter_count() const;

  /// Deep copy; the copies require gradients like the originals.
  ParameterSet clone() const;
  /// Overwrites values in place; names and shapes must agree (ShapeError otherwise).
  void assign(const ParameterSet& other);
  bool all_finite() const;

 private:
  std::vector<NamedTensor<T>> entries_;
};

template <typename To, typename From>
ParameterSet<To> convert_parameters(const ParameterSet<From>& from);

}  // namespace tempo::models
