#include "tempo/nn/ops.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "tempo/common/error.hpp"

namespace tempo::nn {

namespace {

template <typename T>
inline void axpy(T a, const T* x, T* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
inline T dot(const T* x, const T* y, std::size_t n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
inline T total(const T* x, std::size_t n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " + shape_str(s));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void accumulate(const Tensor<T>& dst, std::span<const T> g) {
  auto d = dst.grad();
  axpy(T{1}, g.data(), d.data(), g.size());
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Padding padding) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(kernel.shape(), 4, "conv2d kernel");
  require_rank(bias.shape(), 1, "conv2d bias");
  const std::size_t B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Cout = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != Cin) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input maps, input has " +
                     std::to_string(Cin));
  }
  if (bias.dim(0) != Cout) throw ShapeError("conv2d: bias length does not match output maps");
  if (kh == 0 || kw == 0) throw ShapeError("conv2d: empty kernel");

  std::size_t Hout = H, Wout = W;
  long pt = 0, pl = 0;
  if (padding == Padding::Valid) {
    if (kh > H || kw > W) {
      throw ShapeError("conv2d: kernel " + shape_str(kernel.shape()) + " larger than input " +
                       shape_str(input.shape()));
    }
    Hout = H - kh + 1;
    Wout = W - kw + 1;
  } else {
    pt = static_cast<long>((kh - 1) / 2);
    pl = static_cast<long>((kw - 1) / 2);
  }

  const bool tracked = tape.tracks({&input, &kernel, &bias});
  Tensor<T> out(Shape{B, Cout, Hout, Wout}, tracked);
  const T* in = input.values().data();
  const T* K = kernel.values().data();
  const T* bv = bias.values().data();
  T* o = out.values().data();

  // Visits every (row pair, kernel tap) contributing to output plane (b, oc).
  auto for_each_tap = [=](std::size_t b, std::size_t oc, auto&& fn) {
    for (std::size_t c = 0; c < Cin; ++c) {
      for (std::size_t u = 0; u < kh; ++u) {
        for (std::size_t i = 0; i < Hout; ++i) {
          const long ii = static_cast<long>(i + u) - pt;
          if (ii < 0 || ii >= static_cast<long>(H)) continue;
          const std::size_t in_row = ((b * Cin + c) * H + static_cast<std::size_t>(ii)) * W;
          const std::size_t out_row = ((b * Cout + oc) * Hout + i) * Wout;
          for (std::size_t v = 0; v < kw; ++v) {
            const long shift = static_cast<long>(v) - pl;
            const long j0 = std::max<long>(0, -shift);
            const long j1 = std::min<long>(static_cast<long>(Wout), static_cast<long>(W) - shift);
            if (j1 <= j0) continue;
            const std::size_t k_idx = ((oc * Cin + c) * kh + u) * kw + v;
            fn(k_idx, in_row + static_cast<std::size_t>(j0 + shift), out_row + static_cast<std::size_t>(j0),
               static_cast<std::size_t>(j1 - j0));
          }
        }
      }
    }
  };

  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t oc = 0; oc < Cout; ++oc) {
      std::fill_n(o + (b * Cout + oc) * Hout * Wout, Hout * Wout, bv[oc]);
      for_each_tap(b, oc, [&](std::size_t k_idx, std::size_t in_off, std::size_t out_off, std::size_t n) {
        axpy(K[k_idx], in + in_off, o + out_off, n);
      });
    }
  }

  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      const T* xin = input.values().data();
      const T* kv = kernel.values().data();
      T* gin = input.requires_grad() ? input.grad().data() : nullptr;
      T* gk = kernel.requires_grad() ? kernel.grad().data() : nullptr;
      T* gb = bias.requires_grad() ? bias.grad().data() : nullptr;
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t oc = 0; oc < Cout; ++oc) {
          if (gb) gb[oc] += total(g + (b * Cout + oc) * Hout * Wout, Hout * Wout);
          if (!gin && !gk) continue;
          for_each_tap(b, oc, [&](std::size_t k_idx, std::size_t in_off, std::size_t out_off, std::size_t n) {
            if (gk) gk[k_idx] += dot(g + out_off, xin + in_off, n);
            if (gin) axpy(kv[k_idx], g + out_off, gin + in_off, n);
          });
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2d(Tape<T>& tape, const Tensor<T>& input, std::size_t pool_h, std::size_t pool_w) {
  require_rank(input.shape(), 4, "maxpool2d input");
  if (pool_h == 0 || pool_w == 0) throw ShapeError("maxpool2d: pool sizes must be >= 1");
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (pool_h > H || pool_w > W) {
    throw ShapeError("maxpool2d: pool " + std::to_string(pool_h) + "x" + std::to_string(pool_w) +
                     " larger than input " + shape_str(input.shape()));
  }
  const std::size_t Ho = H / pool_h, Wo = W / pool_w;
  const bool tracked = tape.tracks({&input});
  Tensor<T> out(Shape{B, C, Ho, Wo}, tracked);
  const T* x = input.values().data();
  T* y = out.values().data();
  std::vector<std::uint32_t> argmax(tracked ? out.size() : 0);
  for (std::size_t plane = 0; plane < B * C; ++plane) {
    const T* xp = x + plane * H * W;
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        std::size_t best = (i * pool_h) * W + j * pool_w;
        T best_v = xp[best];
        for (std::size_t u = 0; u < pool_h; ++u) {
          const std::size_t row = (i * pool_h + u) * W + j * pool_w;
          for (std::size_t v = 0; v < pool_w; ++v) {
            if (xp[row + v] > best_v) {
              best_v = xp[row + v];
              best = row + v;
            }
          }
        }
        const std::size_t oi = (plane * Ho + i) * Wo + j;
        y[oi] = best_v;
        if (tracked) argmax[oi] = static_cast<std::uint32_t>(plane * H * W + best);
      }
    }
  }
  if (tracked) {
    tape.record([=, argmax = std::move(argmax)]() {
      if (!out.has_grad()) return;
      const auto g = out.grad();
      auto gin = input.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gin[argmax[i]] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& input) {
  const bool tracked = tape.tracks({&input});
  Tensor<T> out(input.shape(), tracked);
  const auto x = input.values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const auto g = out.grad();
      const auto xv = input.values();
      auto gin = input.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xv[i] > T{0}) gin[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> linear(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(input.shape(), 2, "linear input");
  require_rank(weight.shape(), 2, "linear weight");
  require_rank(bias.shape(), 1, "linear bias");
  const std::size_t B = input.dim(0), F = input.dim(1), D = weight.dim(1);
  if (weight.dim(0) != F) {
    throw ShapeError("linear: input has " + std::to_string(F) + " features, weight expects " +
                     std::to_string(weight.dim(0)));
  }
  if (bias.dim(0) != D) throw ShapeError("linear: bias length does not match output width");
  const bool tracked = tape.tracks({&input, &weight, &bias});
  Tensor<T> out(Shape{B, D}, tracked);
  const T* x = input.values().data();
  const T* w = weight.values().data();
  const T* bv = bias.values().data();
  T* y = out.values().data();
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(bv, D, y + b * D);
    for (std::size_t f = 0; f < F; ++f) axpy(x[b * F + f], w + f * D, y + b * D, D);
  }
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      const T* xv = input.values().data();
      const T* wv = weight.values().data();
      T* gx = input.requires_grad() ? input.grad().data() : nullptr;
      T* gw = weight.requires_grad() ? weight.grad().data() : nullptr;
      T* gb = bias.requires_grad() ? bias.grad().data() : nullptr;
      for (std::size_t b = 0; b < B; ++b) {
        const T* gr = g + b * D;
        if (gb) axpy(T{1}, gr, gb, D);
        for (std::size_t f = 0; f < F; ++f) {
          if (gw) axpy(xv[b * F + f], gr, gw + f * D, D);
          if (gx) gx[b * F + f] += dot(wv + f * D, gr, D);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> dropout(Tape<T>& tape, const Tensor<T>& input, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return input;
  const bool tracked = tape.tracks({&input});
  Tensor<T> out(input.shape(), tracked);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<T> mask(input.size());
  for (auto& m : mask) m = keep(rng) ? scale : T{0};
  const auto x = input.values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
  if (tracked) {
    tape.record([=, mask = std::move(mask)]() {
      if (!out.has_grad()) return;
      const auto g = out.grad();
      auto gin = input.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i] * mask[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> permute(Tape<T>& tape, const Tensor<T>& input, std::span<const std::size_t> axes) {
  const Shape& in_shape = input.shape();
  const std::size_t rank = in_shape.size();
  if (axes.size() != rank) throw ShapeError("permute: axis list does not match rank of " + shape_str(in_shape));
  std::vector<bool> seen(rank, false);
  for (auto a : axes) {
    if (a >= rank || seen[a]) throw ShapeError("permute: axes are not a permutation");
    seen[a] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = in_shape[axes[i]];

  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];

  // Source index of every output element, in output order.
  const std::size_t n = input.size();
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < rank; ++i) s += idx[i] * in_strides[axes[i]];
    src[flat] = s;
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }

  const bool tracked = tape.tracks({&input});
  Tensor<T> out(out_shape, tracked);
  const auto x = input.values();
  auto y = out.values();
  for (std::size_t i = 0; i < n; ++i) y[i] = x[src[i]];
  if (tracked) {
    tape.record([=, src = std::move(src)]() {
      if (!out.has_grad()) return;
      const auto g = out.grad();
      auto gin = input.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gin[src[i]] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& input, Shape shape) {
  if (shape_size(shape) != input.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(input.shape()) + " as " + shape_str(shape));
  }
  const bool tracked = tape.tracks({&input});
  const auto x = input.values();
  Tensor<T> out(std::move(shape), std::vector<T>(x.begin(), x.end()), tracked);
  if (tracked) {
    tape.record([=]() {
      if (out.has_grad()) accumulate<T>(input, out.grad());
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  const bool tracked = tape.tracks({&a, &b});
  Tensor<T> out(a.shape(), tracked);
  const auto x = a.values();
  const auto z = b.values();
  auto y = out.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + z[i];
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      if (a.requires_grad()) accumulate<T>(a, out.grad());
      if (b.requires_grad()) accumulate<T>(b, out.grad());
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  const bool tracked = tape.tracks({&a, &b});
  Tensor<T> out(a.shape(), tracked);
  const auto x = a.values();
  const auto z = b.values();
  auto y = out.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - z[i];
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const auto g = out.grad();
      if (a.requires_grad()) accumulate<T>(a, g);
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  const bool tracked = tape.tracks({&a, &b});
  Tensor<T> out(a.shape(), tracked);
  const auto x = a.values();
  const auto z = b.values();
  auto y = out.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * z[i];
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const auto g = out.grad();
      const auto av = a.values();
      const auto bv = b.values();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> abs(Tape<T>& tape, const Tensor<T>& input) {
  const bool tracked = tape.tracks({&input});
  Tensor<T> out(input.shape(), tracked);
  const auto x = input.values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] < T{0} ? -x[i] : x[i];
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const auto g = out.grad();
      const auto xv = input.values();
      auto gin = input.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xv[i] > T{0}) {
          gin[i] += g[i];
        } else if (xv[i] < T{0}) {
          gin[i] -= g[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& input) {
  const bool tracked = tape.tracks({&input});
  const auto x = input.values();
  Tensor<T> out(Shape{1}, std::vector<T>{std::accumulate(x.begin(), x.end(), T{0})}, tracked);
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const T g = out.grad()[0];
      for (auto& v : input.grad()) v += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_columns(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "concat_columns");
  require_rank(b.shape(), 2, "concat_columns");
  if (a.dim(0) != b.dim(0)) throw ShapeError("concat_columns: row counts differ");
  const std::size_t B = a.dim(0), D1 = a.dim(1), D2 = b.dim(1);
  const bool tracked = tape.tracks({&a, &b});
  Tensor<T> out(Shape{B, D1 + D2}, tracked);
  const T* x = a.values().data();
  const T* z = b.values().data();
  T* y = out.values().data();
  for (std::size_t r = 0; r < B; ++r) {
    std::copy_n(x + r * D1, D1, y + r * (D1 + D2));
    std::copy_n(z + r * D2, D2, y + r * (D1 + D2) + D1);
  }
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      if (a.requires_grad()) {
        T* ga = a.grad().data();
        for (std::size_t r = 0; r < B; ++r) axpy(T{1}, g + r * (D1 + D2), ga + r * D1, D1);
      }
      if (b.requires_grad()) {
        T* gb = b.grad().data();
        for (std::size_t r = 0; r < B; ++r) axpy(T{1}, g + r * (D1 + D2) + D1, gb + r * D2, D2);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> gather_rows(Tape<T>& tape, const Tensor<T>& input, std::span<const std::size_t> rows) {
  if (input.rank() < 1) throw ShapeError("gather_rows on a rank-0 tensor");
  const std::size_t N = input.dim(0);
  const std::size_t inner = N ? input.size() / N : 0;
  Shape shape = input.shape();
  shape[0] = rows.size();
  const bool tracked = tape.tracks({&input});
  Tensor<T> out(shape, tracked);
  const T* x = input.values().data();
  T* y = out.values().data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= N) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(x + rows[r] * inner, inner, y + r * inner);
  }
  if (tracked) {
    tape.record([=, rows = std::vector<std::size_t>(rows.begin(), rows.end())]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      T* gin = input.grad().data();
      for (std::size_t r = 0; r < rows.size(); ++r) axpy(T{1}, g + r * inner, gin + rows[r] * inner, inner);
    });
  }
  return out;
}

template <typename T>
Tensor<T> upsample_last(Tape<T>& tape, const Tensor<T>& input, std::size_t factor) {
  if (factor == 0) throw ShapeError("upsample factor must be >= 1");
  Shape shape = input.shape();
  const std::size_t W = shape.back();
  const std::size_t rows = W ? input.size() / W : 0;
  shape.back() = W * factor;
  const bool tracked = tape.tracks({&input});
  Tensor<T> out(shape, tracked);
  const T* x = input.values().data();
  T* y = out.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < W * factor; ++j) y[r * W * factor + j] = x[r * W + j / factor];
  }
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      T* gin = input.grad().data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < W * factor; ++j) gin[r * W + j / factor] += g[r * W * factor + j];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> resize_last(Tape<T>& tape, const Tensor<T>& input, std::size_t length) {
  Shape shape = input.shape();
  const std::size_t W = shape.back();
  const std::size_t rows = W ? input.size() / W : 0;
  shape.back() = length;
  const std::size_t keep = std::min(W, length);
  const bool tracked = tape.tracks({&input});
  Tensor<T> out(shape, tracked);
  const T* x = input.values().data();
  T* y = out.values().data();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x + r * W, keep, y + r * length);
  if (tracked) {
    tape.record([=]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      T* gin = input.grad().data();
      for (std::size_t r = 0; r < rows; ++r) axpy(T{1}, g + r * length, gin + r * W, keep);
    });
  }
  return out;
}

#define TEMPO_INSTANTIATE_OPS(T)                                                                          \
  template Tensor<T> conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Padding);    \
  template Tensor<T> maxpool2d(Tape<T>&, const Tensor<T>&, std::size_t, std::size_t);                   \
  template Tensor<T> relu(Tape<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> linear(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> dropout(Tape<T>&, const Tensor<T>&, double, bool, Rng&);                           \
  template Tensor<T> permute(Tape<T>&, const Tensor<T>&, std::span<const std::size_t>);                 \
  template Tensor<T> reshape(Tape<T>&, const Tensor<T>&, Shape);                                        \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> sub(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> abs(Tape<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> sum(Tape<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> concat_columns(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> gather_rows(Tape<T>&, const Tensor<T>&, std::span<const std::size_t>);             \
  template Tensor<T> upsample_last(Tape<T>&, const Tensor<T>&, std::size_t);                            \
  template Tensor<T> resize_last(Tape<T>&, const Tensor<T>&, std::size_t);

TEMPO_INSTANTIATE_OPS(float)
TEMPO_INSTANTIATE_OPS(double)

}  // namespace tempo::nn
