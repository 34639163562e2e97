#pragma once

#include <string>
#include <vector>

#include "tempo/signal/synthetic.hpp"
#include "tempo/signal/windows.hpp"

namespace tempo::testing {

/// Four-state regime chain with one spectral peak per state.
inline signal::SyntheticConfig regime_config(std::uint64_t seed, double duration_s, std::vector<double> peaks_hz = {4, 8, 12, 16},
                                             double stay = 0.75) {
  signal::SyntheticConfig c;
  c.n_states = peaks_hz.size();
  const double move = (1.0 - stay) / static_cast<double>(c.n_states - 1);
  c.transition.assign(c.n_states, std::vector<double>(c.n_states, move));
  for (std::size_t i = 0; i < c.n_states; ++i) {
    c.transition[i][i] = stay;
    c.state_spectra.push_back({{peaks_hz[i], 1.0, 1.0}});
  }
  c.duration_s = duration_s;
  c.seed = seed;
  c.subject_id = "subj" + std::to_string(seed);
  return c;
}

inline signal::WindowDataset windows_of(const signal::SyntheticConfig& cfg, double window_s) {
  return signal::extract_windows(signal::generate_synthetic(cfg), window_s, signal::LabelScheme::AASM, cfg.subject_id);
}

/// Short-block variant for fast training tests: 5-s blocks and windows at 40 Hz.
inline signal::SyntheticConfig quick_config(std::uint64_t seed, std::size_t blocks, double stay = 0.75,
                                            std::vector<double> peaks_hz = {2, 6, 10, 14}) {
  auto c = regime_config(seed, 5.0 * static_cast<double>(blocks), std::move(peaks_hz), stay);
  c.block_s = 5.0;
  c.rate_hz = 40.0;
  return c;
}

}  // namespace tempo::testing
