#pragma once

#include <cstddef>
#include <vector>

#include "tempo/nn/tensor.hpp"

namespace tempo::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Gradients are zeroed after every step.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamOptions options = {});

  /// Throws if a parameter never received a gradient.
  void step();
  void zero_grad();

  std::size_t step_count() const noexcept { return steps_; }
  const AdamOptions& options() const noexcept { return options_; }
  const std::vector<double>& first_moment(std::size_t param) const { return m_.at(param); }
  const std::vector<double>& second_moment(std::size_t param) const { return v_.at(param); }

 private:
  std::vector<Tensor<T>> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace tempo::nn
