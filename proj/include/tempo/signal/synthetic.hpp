#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tempo/signal/recording.hpp"

namespace tempo::signal {

/// Narrowband oscillation: a sinusoid at center_hz plus Gaussian noise confined
/// to [center - bandwidth/2, center + bandwidth/2], each of mean square
/// amplitude^2 / 2.
struct SpectralComponent {
  double center_hz = 10.0;
  double bandwidth_hz = 0.0;
  double amplitude = 1.0;
};

/// State-independent background oscillation whose log-amplitude follows a
/// slow first-order autoregressive process across blocks.
struct SlowComponent {
  SpectralComponent band;
  double timescale_s = 1200.0;  // correlation time of the log-amplitude
  double modulation = 1.0;      // standard deviation of the log-amplitude
};

struct SyntheticConfig {
  std::size_t n_states = 2;
  std::vector<std::vector<double>> transition;  // row-stochastic, n_states x n_states
  std::vector<std::vector<SpectralComponent>> state_spectra;
  double duration_s = 3600.0;
  double rate_hz = 100.0;
  std::size_t channels = 2;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
  double block_s = 30.0;  // one hidden state per block
  std::vector<SlowComponent> slow_components;
  std::string subject_id = "synthetic";
  std::optional<double> age_years;

  /// Throws ConfigError on a malformed configuration.
  void validate() const;
};

/// Raw hypnogram label used for hidden state `state`: AASM stage names for the
/// first five states, "state <k>" beyond.
std::string synthetic_state_label(std::size_t state);

/// Regime-switching recording: a Markov chain picks one state per block and
/// each channel carries that state's oscillations, the slow background
/// components and white noise. The state sequence is attached as annotations.
/// Output depends only on the configuration (seed included).
Recording generate_synthetic(const SyntheticConfig& cfg);

/// Hidden state index per block, recovered from the annotations of a generated recording.
std::vector<std::size_t> synthetic_states(const Recording& rec);

}  // namespace tempo::signal
