#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tempo::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array with an optional gradient buffer.
///
/// A Tensor is a handle: copies refer to the same storage. This is what lets
/// one parameter feed several branches of a graph (siamese weight sharing)
/// and receive the sum of every branch's gradient. Use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);
  Tensor(Shape shape, std::initializer_list<T> values, bool requires_grad = false)
      : Tensor(std::move(shape), std::vector<T>(values), requires_grad) {}

  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(storage_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<T> values() const;
  T item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag) const;

  bool has_grad() const;
  /// Gradient buffer, allocated as zeros on first access.
  std::span<T> grad() const;
  void zero_grad() const;
  void clear_grad() const;

  bool shares_storage(const Tensor& other) const noexcept { return storage_ == other.storage_; }
  /// Deep copy of shape and values; the copy has no gradient.
  Tensor clone() const;

 private:
  struct Storage {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
};

/// Records the backward closures of primitive applications in execution order.
/// Replaying them in reverse propagates d(loss)/d(input) for every tensor
/// that requires a gradient. A tape is replayed at most once.
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const noexcept { return recording_ && !consumed_; }

  /// True when an op over these inputs has to be recorded.
  bool tracks(std::initializer_list<const Tensor<T>*> inputs) const;

  void record(std::function<void()> backward_fn);

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  void backward(const Tensor<T>& loss);

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<std::function<void()>> entries_;
  bool recording_ = true;
  bool consumed_ = false;
};

}  // namespace tempo::nn
