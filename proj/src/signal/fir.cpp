#include "tempo/signal/fir.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "tempo/common/error.hpp"

namespace tempo::signal {

FirFilter design_lowpass_fir(double cutoff_hz, int order, double rate_hz) {
  if (!(rate_hz > 0.0)) throw ConfigError("filter design: sampling rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) {
    throw ConfigError("filter design: cutoff " + std::to_string(cutoff_hz) + " Hz must lie strictly inside (0, " +
                      std::to_string(rate_hz / 2.0) + ") Hz");
  }
  if (order < 2) throw ConfigError("filter design: order must be at least 2");

  int taps = order + 1;
  if (taps % 2 == 0) ++taps;
  const double fc = cutoff_hz / rate_hz;  // cycles per sample
  const double center = (taps - 1) / 2.0;

  FirFilter f;
  f.cutoff_hz = cutoff_hz;
  f.rate_hz = rate_hz;
  f.design_order = order;
  f.coefficients.resize(static_cast<std::size_t>(taps));
  for (int n = 0; n < taps; ++n) {
    const double x = n - center;
    const double sinc = x == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * x) / (std::numbers::pi * x);
    const double hamming = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (taps - 1));
    f.coefficients[static_cast<std::size_t>(n)] = sinc * hamming;
  }
  // Symmetrize so rounding in sin() cannot break exact linear phase.
  for (int n = 0; n < taps / 2; ++n) {
    const auto a = static_cast<std::size_t>(n);
    const auto b = static_cast<std::size_t>(taps - 1 - n);
    const double avg = 0.5 * (f.coefficients[a] + f.coefficients[b]);
    f.coefficients[a] = f.coefficients[b] = avg;
  }
  const double gain = std::accumulate(f.coefficients.begin(), f.coefficients.end(), 0.0);
  for (auto& c : f.coefficients) c /= gain;
  return f;
}

double magnitude_response(const FirFilter& filter, double frequency_hz) {
  const double w = 2.0 * std::numbers::pi * frequency_hz / filter.rate_hz;
  std::complex<double> h{0.0, 0.0};
  for (std::size_t n = 0; n < filter.coefficients.size(); ++n) {
    h += filter.coefficients[n] * std::polar(1.0, -w * static_cast<double>(n));
  }
  return std::abs(h);
}

std::vector<double> filter_aligned(const FirFilter& filter, std::span<const double> signal) {
  const auto& h = filter.coefficients;
  const long L = static_cast<long>(h.size());
  const long D = static_cast<long>(filter.group_delay());
  const long M = static_cast<long>(signal.size());
  std::vector<double> out(signal.size(), 0.0);
  for (long n = 0; n < M; ++n) {
    // y[n] = sum_k h[k] x[n + D - k]
    const long k0 = std::max(0L, n + D - (M - 1));
    const long k1 = std::min(L - 1, n + D);
    double acc = 0.0;
    for (long k = k0; k <= k1; ++k) acc += h[static_cast<std::size_t>(k)] * signal[static_cast<std::size_t>(n + D - k)];
    out[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

}  // namespace tempo::signal
