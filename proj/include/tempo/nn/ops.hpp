#pragma once

#include <cstddef>
#include <span>

#include "tempo/common/random.hpp"
#include "tempo/nn/tensor.hpp"

namespace tempo::nn {

enum class Padding { Valid, Same };

/// 2-D cross-correlation, stride 1.
///   input  [B, Cin, H, W], kernel [Cout, Cin, kh, kw], bias [Cout]
/// Same padding zero-pads (k-1)/2 before and k-1-(k-1)/2 after each spatial
/// axis so the output keeps H x W (for even k the extra zero goes after).
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Padding padding);

/// Non-overlapping max pooling over the last two axes of [B, C, H, W].
/// Trailing partial windows are dropped; ties route the gradient to the first maximum.
template <typename T>
Tensor<T> maxpool2d(Tape<T>& tape, const Tensor<T>& input, std::size_t pool_h, std::size_t pool_w);

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& input);

/// input [B, F] * weight [F, D] + bias [D]
template <typename T>
Tensor<T> linear(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Inverted dropout. Identity (same handle) when not training or rate == 0.
template <typename T>
Tensor<T> dropout(Tape<T>& tape, const Tensor<T>& input, double rate, bool training, Rng& rng);

/// out.shape[i] = in.shape[axes[i]]
template <typename T>
Tensor<T> permute(Tape<T>& tape, const Tensor<T>& input, std::span<const std::size_t> axes);

template <typename T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& input, Shape shape);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> abs(Tape<T>& tape, const Tensor<T>& input);
template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& input);

/// [B, D1] ++ [B, D2] -> [B, D1 + D2]
template <typename T>
Tensor<T> concat_columns(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

/// Selects rows (first-axis slices); repeated indices accumulate in backward.
template <typename T>
Tensor<T> gather_rows(Tape<T>& tape, const Tensor<T>& input, std::span<const std::size_t> rows);

/// Nearest-neighbour upsampling of the last axis by an integer factor.
template <typename T>
Tensor<T> upsample_last(Tape<T>& tape, const Tensor<T>& input, std::size_t factor);

/// Crops or zero-pads the last axis (at its end) to the given length.
template <typename T>
Tensor<T> resize_last(Tape<T>& tape, const Tensor<T>& input, std::size_t length);

}  // namespace tempo::nn
