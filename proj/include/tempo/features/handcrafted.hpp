#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tempo/signal/windows.hpp"

namespace tempo::features {

inline constexpr std::size_t kFeaturesPerChannel = 34;
inline constexpr std::size_t kBands = 5;
inline constexpr std::array<double, kBands + 1> kBandEdgesHz{0.5, 4.0, 8.0, 13.0, 30.0, 49.0};
inline constexpr double kPowerFloor = 1e-10;
inline constexpr std::size_t kMinSamples = 64;

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
};

/// ln(sum of periodogram bins with lo <= f < hi + 1e-10). Untapered periodogram
/// of the whole signal, scaled to sum to its mean square.
double band_log_power(std::span<const double> x, double lo_hz, double hi_hz, double rate_hz);

/// The five band log-powers from a single FFT. Bands above Nyquist hold no bins
/// and come out at the log floor.
std::array<double, kBands> band_log_powers(std::span<const double> x, double rate_hz);

/// Rescaled-range estimate over dyadic chunk sizes 16, 32, ..., T/2. Returns 0.5
/// when no chunk has spread (constant input).
double hurst_exponent(std::span<const double> x);

/// ApEn(m, r) with self-matches. A negative r means 0.2 times the standard deviation.
double approximate_entropy(std::span<const double> x, std::size_t m = 2, double r = -1.0);

/// mobility(diff x) / mobility(x); 1 when a variance vanishes.
double hjorth_complexity(std::span<const double> x);

/// Names in output order for the given channels, e.g. "EEG Fpz-Cz:hurst".
std::vector<std::string> feature_names(std::span<const std::string> channel_names);

/// 34 features per channel, channels in window order.
FeatureVector compute_feature_vector(const signal::Window& window, const signal::WindowDataset& layout);

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<std::string> names;
};

/// Feature vectors of every window, computed in parallel.
FeatureMatrix compute_feature_matrix(const signal::WindowDataset& ds);

/// Header of feature names, one line per window.
void write_feature_csv(const FeatureMatrix& m, std::ostream& out);

}  // namespace tempo::features
