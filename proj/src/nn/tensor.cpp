#include "tempo/nn/tensor.hpp"

#include <algorithm>

#include "tempo/common/error.hpp"

namespace tempo::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad) : storage_(std::make_shared<Storage>()) {
  storage_->values.assign(shape_size(shape), T{0});
  storage_->shape = std::move(shape);
  storage_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  if (values.size() != shape_size(shape)) {
    throw ShapeError("tensor of shape " + shape_str(shape) + " given " + std::to_string(values.size()) +
                     " values");
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
  storage_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  if (!storage_) throw Error("use of an undefined tensor");
  return storage_->shape;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  return s[axis];
}

template <typename T>
std::size_t Tensor<T>::size() const {
  return storage_ ? storage_->values.size() : 0;
}

template <typename T>
std::span<T> Tensor<T>::values() const {
  if (!storage_) throw Error("use of an undefined tensor");
  return storage_->values;
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return storage_->values[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return storage_ && storage_->requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) const {
  if (!storage_) throw Error("use of an undefined tensor");
  storage_->requires_grad = flag;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return storage_ && !storage_->grad.empty();
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (!storage_) throw Error("use of an undefined tensor");
  if (storage_->grad.empty()) storage_->grad.assign(storage_->values.size(), T{0});
  return storage_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  if (storage_ && !storage_->grad.empty()) std::fill(storage_->grad.begin(), storage_->grad.end(), T{0});
}

template <typename T>
void Tensor<T>::clear_grad() const {
  if (storage_) {
    storage_->grad.clear();
    storage_->grad.shrink_to_fit();
  }
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(shape(), storage_->values, false);
}

template <typename T>
bool Tape<T>::tracks(std::initializer_list<const Tensor<T>*> inputs) const {
  if (!recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>* t) { return t && t->requires_grad(); });
}

template <typename T>
void Tape<T>::record(std::function<void()> backward_fn) {
  if (consumed_) throw Error("tape already replayed; record a new graph before calling backward again");
  entries_.push_back(std::move(backward_fn));
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (consumed_) throw Error("backward called twice on the same tape without re-recording");
  if (loss.size() != 1) throw ShapeError("backward needs a scalar loss, got " + shape_str(loss.shape()));
  consumed_ = true;
  if (!loss.requires_grad()) return;
  loss.grad()[0] += T{1};
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace tempo::nn
