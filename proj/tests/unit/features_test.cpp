#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "tempo/common/random.hpp"
#include "tempo/features/handcrafted.hpp"

using namespace tempo;
using namespace tempo::features;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

std::vector<double> sine(double f, double rate, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / rate);
  return x;
}

signal::WindowDataset layout(std::size_t channels, std::size_t samples) {
  signal::WindowDataset ds;
  ds.channels = channels;
  ds.window_samples = samples;
  ds.rate_hz = 100.0;
  for (std::size_t c = 0; c < channels; ++c) ds.channel_names.push_back("c" + std::to_string(c));
  return ds;
}

signal::Window window_from(const std::vector<std::vector<double>>& channels) {
  signal::Window w;
  for (const auto& ch : channels)
    for (double v : ch) w.data.push_back(static_cast<float>(v));
  return w;
}

std::size_t column(const FeatureVector& f, const std::string& name) {
  return static_cast<std::size_t>(std::ranges::find(f.names, name) - f.names.begin());
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("vector layout") {
    for (std::size_t C : {1u, 2u, 3u}) {
      const auto ds = layout(C, 3000);
      std::vector<std::vector<double>> chans;
      for (std::size_t c = 0; c < C; ++c) chans.push_back(noise(3000, c));
      const auto f = compute_feature_vector(window_from(chans), ds);
      CHECK(f.values.size() == 34 * C);
      CHECK(f.names.size() == 34 * C);
      CHECK(std::set<std::string>(f.names.begin(), f.names.end()).size() == f.names.size());
      CHECK(f.names.front().rfind("c0:", 0) == 0);
      CHECK(f.names.back().rfind("c" + std::to_string(C - 1) + ":", 0) == 0);
    }
  }

  TEST_CASE("moments of a normalized window and of Gaussian noise") {
    auto x = noise(3000, 4);
    double m = 0, s = 0;
    for (double v : x) m += v;
    m /= 3000;
    for (double v : x) s += (v - m) * (v - m);
    s = std::sqrt(s / 3000);
    for (auto& v : x) v = (v - m) / s;
    const auto f = compute_feature_vector(window_from({x}), layout(1, 3000));
    CHECK(std::abs(f.values[column(f, "c0:mean")]) < 1e-6);
    CHECK(std::abs(f.values[column(f, "c0:std")] - 1.0) < 1e-6);
    CHECK(std::abs(f.values[column(f, "c0:variance")] - 1.0) < 1e-6);
    CHECK(std::abs(f.values[column(f, "c0:skewness")]) < 0.1);
    CHECK(std::abs(f.values[column(f, "c0:kurtosis")]) < 0.2);
  }

  TEST_CASE("band log-powers") {
    const auto s = band_log_powers(sine(10.0, 100.0, 3000), 100.0);
    CHECK(std::ranges::max_element(s) - s.begin() == 2);
    const auto z = band_log_powers(std::vector<double>(3000, 0.0), 100.0);
    for (double v : z) CHECK(v == doctest::Approx(std::log(kPowerFloor)));
    double low = 0, high = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto p = band_log_powers(noise(3000, seed), 100.0);
      low += p[0];
      high += p[4];
    }
    CHECK(high > low);
    const auto x = noise(3000, 9);
    CHECK(band_log_power(x, 8.0, 13.0, 100.0) == doctest::Approx(band_log_powers(x, 100.0)[2]).epsilon(1e-12));
  }

  TEST_CASE("band ratios are log-power differences") {
    const auto f = compute_feature_vector(window_from({noise(3000, 2)}), layout(1, 3000));
    const std::array<const char*, 5> bands{"delta", "theta", "alpha", "beta", "gamma"};
    std::size_t ratios = 0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        if (i == j) continue;
        const auto r = column(f, std::string("c0:ratio_") + bands[i] + "_" + bands[j]);
        REQUIRE(r < f.names.size());
        CHECK(f.values[r] == f.values[column(f, std::string("c0:logpow_") + bands[i])] -
                                 f.values[column(f, std::string("c0:logpow_") + bands[j])]);
        ++ratios;
      }
    CHECK(ratios == 20);
  }

  TEST_CASE("Hurst exponent") {
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) mean += hurst_exponent(noise(3000, seed)) / 20;
    CHECK(mean >= 0.4);
    CHECK(mean <= 0.6);
    auto walk = noise(3000, 1);
    for (std::size_t i = 1; i < walk.size(); ++i) walk[i] += walk[i - 1];
    CHECK(hurst_exponent(walk) > 0.85);
    CHECK(hurst_exponent(std::vector<double>(3000, 2.0)) == 0.5);
  }

  TEST_CASE("approximate entropy") {
    CHECK(approximate_entropy(std::vector<double>(500, 3.0)) == 0.0);
    const auto s = sine(5.0, 100.0, 1000, std::sqrt(2.0));
    const auto n = noise(1000, 3);
    CHECK(approximate_entropy(s) < approximate_entropy(n));
    auto scaled = n;
    for (auto& v : scaled) v = 4.0 * v - 7.0;
    CHECK(approximate_entropy(scaled) == doctest::Approx(approximate_entropy(n)).epsilon(1e-12));

    // Brute-force definition on a short series.
    const auto x = noise(120, 8);
    const double r = 0.3;
    auto phi = [&](std::size_t m) {
      const std::size_t N = x.size() - m + 1;
      double total = 0;
      for (std::size_t i = 0; i < N; ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < N; ++j) {
          double d = 0;
          for (std::size_t k = 0; k < m; ++k) d = std::max(d, std::abs(x[i + k] - x[j + k]));
          c += d <= r;
        }
        total += std::log(static_cast<double>(c) / static_cast<double>(N));
      }
      return total / static_cast<double>(N);
    };
    CHECK(approximate_entropy(x, 2, r) == doctest::Approx(phi(2) - phi(3)).epsilon(1e-12));
  }

  TEST_CASE("Hjorth complexity") {
    CHECK(std::abs(hjorth_complexity(sine(5.0, 100.0, 3000)) - 1.0) < 0.02);
    for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(hjorth_complexity(noise(3000, seed)) > 1.0);
    CHECK(hjorth_complexity(std::vector<double>(100, 1.0)) == 1.0);
  }

  TEST_CASE("every feature is finite on degenerate and random windows") {
    const auto ds = layout(2, 300);
    Rng rng(12);
    std::uniform_int_distribution<int> kind(0, 4);
    std::normal_distribution<double> g;
    std::size_t bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      std::vector<std::vector<double>> chans(2, std::vector<double>(300, 0.0));
      for (auto& ch : chans) {
        switch (kind(rng)) {
          case 0: break;
          case 1: std::ranges::fill(ch, g(rng)); break;
          case 2: ch[std::uniform_int_distribution<std::size_t>(0, 299)(rng)] = 1e3 * g(rng); break;
          case 3: for (auto& v : ch) v = g(rng); break;
          default: for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = (i % 2 ? 1.0 : -1.0) * std::abs(g(rng)); break;
        }
      }
      const auto f = compute_feature_vector(window_from(chans), ds);
      for (double v : f.values) bad += !std::isfinite(v);
    }
    CHECK(bad == 0);
  }

  TEST_CASE("feature matrix CSV") {
    auto ds = layout(1, 300);
    ds.recordings.push_back({"r", "s", std::nullopt});
    for (int i = 0; i < 3; ++i) {
      auto w = window_from({noise(300, static_cast<std::uint64_t>(i))});
      w.start_sample = i * 300;
      ds.windows.push_back(w);
    }
    const auto m = compute_feature_matrix(ds);
    CHECK(m.rows == 3);
    CHECK(m.cols == 34);
    std::ostringstream out;
    write_feature_csv(m, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("c0:mean,c0:variance", 0) == 0);
  }
}
