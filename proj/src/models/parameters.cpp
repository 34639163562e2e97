#include "tempo/models/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "tempo/common/error.hpp"

namespace tempo::models {

template <typename T>
const nn::Tensor<T>& ParameterSet<T>::add(std::string name, nn::Shape shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw ShapeError("parameter '" + name + "': zero fan-in");
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  nn::Tensor<T> t(std::move(shape), true);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return insert(std::move(name), std::move(t));
}

template <typename T>
const nn::Tensor<T>& ParameterSet<T>::insert(std::string name, nn::Tensor<T> tensor) {
  if (contains(name)) throw Error("duplicate parameter '" + name + "'");
  entries_.push_back({std::move(name), std::move(tensor)});
  return entries_.back().tensor;
}

template <typename T>
bool ParameterSet<T>::contains(std::string_view name) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
}

template <typename T>
const nn::Tensor<T>& ParameterSet<T>::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw Error("no parameter named '" + std::string(name) + "'");
}

template <typename T>
std::vector<nn::Tensor<T>> ParameterSet<T>::tensors() const {
  std::vector<nn::Tensor<T>> out;
  for (const auto& e : entries_) out.push_back(e.tensor);
  return out;
}

template <typename T>
std::size_t ParameterSet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

template <typename T>
ParameterSet<T> ParameterSet<T>::clone() const {
  ParameterSet out;
  for (const auto& e : entries_) {
    auto t = e.tensor.clone();
    t.set_requires_grad(e.tensor.requires_grad());
    out.insert(e.name, std::move(t));
  }
  return out;
}

template <typename T>
void ParameterSet<T>::assign(const ParameterSet& other) {
  if (other.size() != size()) throw ShapeError("parameter sets differ in size");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& dst = entries_[i];
    const auto& src = other.entries_[i];
    if (dst.name != src.name || dst.tensor.shape() != src.tensor.shape()) {
      throw ShapeError("parameter mismatch: " + dst.name + " " + nn::shape_str(dst.tensor.shape()) + " vs " + src.name +
                       " " + nn::shape_str(src.tensor.shape()));
    }
    std::ranges::copy(src.tensor.values(), dst.tensor.values().begin());
  }
}

template <typename T>
bool ParameterSet<T>::all_finite() const {
  for (const auto& e : entries_) {
    for (T v : e.tensor.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename To, typename From>
ParameterSet<To> convert_parameters(const ParameterSet<From>& from) {
  ParameterSet<To> out;
  for (const auto& e : from.entries()) {
    std::vector<To> values(e.tensor.values().begin(), e.tensor.values().end());
    out.insert(e.name, nn::Tensor<To>(e.tensor.shape(), std::move(values), e.tensor.requires_grad()));
  }
  return out;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template ParameterSet<float> convert_parameters<float, double>(const ParameterSet<double>&);
template ParameterSet<double> convert_parameters<double, float>(const ParameterSet<float>&);
template ParameterSet<float> convert_parameters<float, float>(const ParameterSet<float>&);
template ParameterSet<double> convert_parameters<double, double>(const ParameterSet<double>&);

}  // namespace tempo::models
