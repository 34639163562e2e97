#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tempo::signal {

/// One scored interval of a hypnogram, label kept verbatim.
struct Annotation {
  double start_s = 0.0;
  double duration_s = 0.0;
  std::string label;
};

/// Multichannel signal, C channels x M samples in physical units, one common rate.
struct Recording {
  std::vector<std::vector<double>> signals;
  double rate_hz = 0.0;
  std::vector<std::string> channel_names;
  std::string subject_id;
  std::optional<double> age_years;
  std::vector<Annotation> annotations;

  std::size_t channels() const noexcept { return signals.size(); }
  std::size_t samples() const noexcept { return signals.empty() ? 0 : signals.front().size(); }
  double duration_s() const noexcept { return rate_hz > 0 ? static_cast<double>(samples()) / rate_hz : 0.0; }

  /// Throws ConfigError when channels disagree in length, names are missing,
  /// the rate is not positive or the recording is empty.
  void validate() const;
};

}  // namespace tempo::signal
