#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tempo::signal {

/// One-sided power per FFT bin (no taper), scaled so the bins sum to the mean
/// square of the signal. Bin k sits at k * rate / N, k = 0 .. N/2.
std::vector<double> power_spectrum(std::span<const double> x);

double bin_frequency(std::size_t bin, std::size_t n, double rate_hz);

/// Real signal of length n from its one-sided spectrum (n/2 + 1 bins), unnormalized.
std::vector<double> inverse_real_fft(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace tempo::signal
