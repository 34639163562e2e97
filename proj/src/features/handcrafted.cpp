#include "tempo/features/handcrafted.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tempo/common/csv.hpp"
#include "tempo/common/error.hpp"
#include "tempo/common/parallel.hpp"
#include "tempo/signal/spectrum.hpp"

namespace tempo::features {

namespace {

constexpr std::array<const char*, kBands> kBandNames{"delta", "theta", "alpha", "beta", "gamma"};

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double variance_of(std::span<const double> x) {
  const double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size());
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

void check_band(double lo, double hi, double rate) {
  if (!(lo >= 0.0 && lo < hi && hi <= rate / 2.0)) {
    throw ConfigError("invalid band [" + std::to_string(lo) + ", " + std::to_string(hi) + ") Hz at " +
                      std::to_string(rate) + " Hz sampling");
  }
}

double band_sum(const std::vector<double>& spectrum, std::size_t n, double lo, double hi, double rate) {
  double s = 0.0;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double f = signal::bin_frequency(k, n, rate);
    if (f >= lo && f < hi) s += spectrum[k];
  }
  return s;
}

}  // namespace

double band_log_power(std::span<const double> x, double lo_hz, double hi_hz, double rate_hz) {
  check_band(lo_hz, hi_hz, rate_hz);
  if (x.empty()) throw ConfigError("band power of an empty signal");
  const auto p = signal::power_spectrum(x);
  return std::log(band_sum(p, x.size(), lo_hz, hi_hz, rate_hz) + kPowerFloor);
}

std::array<double, kBands> band_log_powers(std::span<const double> x, double rate_hz) {
  if (!(rate_hz > 0.0)) throw ConfigError("sampling rate must be positive");
  const auto p = signal::power_spectrum(x);
  std::array<double, kBands> out{};
  for (std::size_t b = 0; b < kBands; ++b) {
    out[b] = std::log(band_sum(p, x.size(), kBandEdgesHz[b], kBandEdgesHz[b + 1], rate_hz) + kPowerFloor);
  }
  return out;
}

double hurst_exponent(std::span<const double> x) {
  const std::size_t T = x.size();
  std::vector<double> log_n, log_rs;
  for (std::size_t n = 16; n <= T / 2; n *= 2) {
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c + n <= T; c += n) {
      const auto chunk = x.subspan(c, n);
      const double mu = mean_of(chunk);
      double cum = 0.0, lo = 0.0, hi = 0.0, ss = 0.0;
      for (double v : chunk) {
        cum += v - mu;
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
        ss += (v - mu) * (v - mu);
      }
      const double sd = std::sqrt(ss / static_cast<double>(n));
      if (sd > 0.0 && hi > lo) {
        acc += (hi - lo) / sd;
        ++used;
      }
    }
    if (used > 0) {
      log_n.push_back(std::log(static_cast<double>(n)));
      log_rs.push_back(std::log(acc / static_cast<double>(used)));
    }
  }
  if (log_n.size() < 2) return 0.5;
  const double mx = mean_of(log_n), my = mean_of(log_rs);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sxy += (log_n[i] - mx) * (log_rs[i] - my);
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
  }
  return sxy / sxx;
}

double approximate_entropy(std::span<const double> x, std::size_t m, double r) {
  const std::size_t N = x.size();
  if (m == 0 || N < m + 2) throw ConfigError("approximate entropy needs at least m + 2 samples");
  const double sd = std::sqrt(variance_of(x));
  if (sd == 0.0) return 0.0;
  if (r < 0.0) r = 0.2 * sd;

  // Templates of length m start at 0 .. N-m; those of length m+1 at 0 .. N-m-1.
  const std::size_t nm = N - m + 1, nm1 = N - m;
  std::vector<double> count_m(nm, 1.0), count_m1(nm1, 1.0);  // self-matches
  std::vector<std::size_t> order(nm);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  for (std::size_t p = 0; p < nm; ++p) {
    const std::size_t i = order[p];
    for (std::size_t q = p + 1; q < nm && x[order[q]] - x[i] <= r; ++q) {
      const std::size_t j = order[q];
      bool match = true;
      for (std::size_t k = 1; k < m && match; ++k) match = std::abs(x[i + k] - x[j + k]) <= r;
      if (!match) continue;
      count_m[i] += 1.0;
      count_m[j] += 1.0;
      if (i < nm1 && j < nm1 && std::abs(x[i + m] - x[j + m]) <= r) {
        count_m1[i] += 1.0;
        count_m1[j] += 1.0;
      }
    }
  }
  auto phi = [](const std::vector<double>& counts) {
    const double n = static_cast<double>(counts.size());
    double s = 0.0;
    for (double c : counts) s += std::log(c / n);
    return s / n;
  };
  return phi(count_m) - phi(count_m1);
}

double hjorth_complexity(std::span<const double> x) {
  if (x.size() < 3) throw ConfigError("Hjorth complexity needs at least 3 samples");
  const auto d1 = diff(x);
  const auto d2 = diff(d1);
  const double v0 = variance_of(x), v1 = variance_of(d1), v2 = variance_of(d2);
  if (!(v0 > 0.0) || !(v1 > 0.0)) return 1.0;
  const double mob_x = std::sqrt(v1 / v0);
  const double mob_d = std::sqrt(v2 / v1);
  return mob_d / mob_x;
}

std::vector<std::string> feature_names(std::span<const std::string> channel_names) {
  std::vector<std::string> names;
  for (const auto& ch : channel_names) {
    const std::string p = ch + ":";
    for (const char* n : {"mean", "variance", "skewness", "kurtosis", "std"}) names.push_back(p + n);
    for (const char* b : kBandNames) names.push_back(p + "logpow_" + b);
    for (std::size_t i = 0; i < kBands; ++i) {
      for (std::size_t j = 0; j < kBands; ++j) {
        if (i != j) names.push_back(p + "ratio_" + kBandNames[i] + "_" + kBandNames[j]);
      }
    }
    for (const char* n : {"peak_to_peak", "hurst", "apen", "hjorth_complexity"}) names.push_back(p + n);
  }
  return names;
}

FeatureVector compute_feature_vector(const signal::Window& window, const signal::WindowDataset& layout) {
  const std::size_t C = layout.channels, T = layout.window_samples;
  if (T < kMinSamples) {
    throw ConfigError("handcrafted features need windows of at least " + std::to_string(kMinSamples) + " samples");
  }
  if (window.data.size() != C * T) throw ShapeError("window does not match the dataset layout");
  FeatureVector fv;
  fv.values.reserve(C * kFeaturesPerChannel);
  std::vector<double> x(T);
  for (std::size_t c = 0; c < C; ++c) {
    std::copy_n(window.data.begin() + static_cast<std::ptrdiff_t>(c * T), T, x.begin());
    auto& v = fv.values;
    const double mu = mean_of(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double s : x) {
      const double d = s - mu;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(T);
    m3 /= static_cast<double>(T);
    m4 /= static_cast<double>(T);
    v.push_back(mu);
    v.push_back(m2);
    v.push_back(m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0);
    v.push_back(m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0);
    v.push_back(std::sqrt(m2));

    const auto bands = band_log_powers(x, layout.rate_hz);
    v.insert(v.end(), bands.begin(), bands.end());
    for (std::size_t i = 0; i < kBands; ++i) {
      for (std::size_t j = 0; j < kBands; ++j) {
        if (i != j) v.push_back(bands[i] - bands[j]);
      }
    }
    const auto [lo, hi] = std::ranges::minmax(x);
    v.push_back(hi - lo);
    v.push_back(hurst_exponent(x));
    v.push_back(approximate_entropy(x));
    v.push_back(hjorth_complexity(x));
  }
  std::vector<std::string> channel_names = layout.channel_names;
  if (channel_names.size() != C) {
    channel_names.clear();
    for (std::size_t c = 0; c < C; ++c) channel_names.push_back("ch" + std::to_string(c));
  }
  fv.names = feature_names(channel_names);
  return fv;
}

FeatureMatrix compute_feature_matrix(const signal::WindowDataset& ds) {
  FeatureMatrix m;
  m.rows = ds.size();
  m.cols = ds.channels * kFeaturesPerChannel;
  m.values.assign(m.rows * m.cols, 0.0);
  if (m.rows == 0) return m;
  m.names = compute_feature_vector(ds.windows.front(), ds).names;
  parallel_for(m.rows, [&](std::size_t i) {
    const auto fv = compute_feature_vector(ds.windows[i], ds);
    std::ranges::copy(fv.values, m.values.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
  });
  return m;
}

void write_feature_csv(const FeatureMatrix& m, std::ostream& out) {
  for (std::size_t j = 0; j < m.names.size(); ++j) out << (j ? "," : "") << m.names[j];
  out << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) out << (j ? "," : "") << csv::format_real(m.values[i * m.cols + j]);
    out << '\n';
  }
}

}  // namespace tempo::features
