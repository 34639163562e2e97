#include "tempo/eval/metrics.hpp"

namespace tempo::eval {

template double balanced_accuracy<int>(std::span<const int>, std::span<const int>);
template double balanced_accuracy<std::size_t>(std::span<const std::size_t>, std::span<const std::size_t>);

}  // namespace tempo::eval
