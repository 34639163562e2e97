#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempo/signal/recording.hpp"
#include "tempo/signal/stages.hpp"

namespace tempo::signal {

struct RecordingInfo {
  std::string id;
  std::string subject_id;
  std::optional<double> age_years;
};

/// A normalized slice of one recording, stored channel-major (C rows of T samples).
struct Window {
  std::vector<float> data;
  std::int64_t start_sample = 0;
  std::size_t recording = 0;  // index into WindowDataset::recordings
  std::optional<SleepStage> stage;
  bool degenerate = false;  // a channel was flat and has been zeroed
};

/// Windows of fixed length from one or more recordings. Windows of a recording
/// are contiguous in `windows`, sorted by start and spaced exactly
/// window_samples apart.
struct WindowDataset {
  std::size_t channels = 0;
  std::size_t window_samples = 0;
  double rate_hz = 0.0;
  std::vector<std::string> channel_names;
  std::vector<RecordingInfo> recordings;
  std::vector<Window> windows;

  std::size_t size() const noexcept { return windows.size(); }
  bool empty() const noexcept { return windows.empty(); }
  double start_seconds(std::size_t window) const;
  double window_seconds() const { return static_cast<double>(window_samples) / rate_hz; }

  /// Window indices grouped per recording, in recording order.
  std::vector<std::vector<std::size_t>> windows_by_recording() const;

  /// Moves the windows of `other` in; layouts must agree.
  void append(WindowDataset&& other);

  /// Windows of the listed subjects, recordings renumbered in order of appearance.
  WindowDataset subset_by_subjects(std::span<const std::string> subjects) const;
  WindowDataset subset(std::span<const std::size_t> window_indices) const;

  std::vector<std::string> subjects() const;

  /// Checks the layout invariants; throws ConfigError on violation.
  void validate() const;
};

/// Cuts floor(M / T) back-to-back windows (T = window_s * rate), normalizes every
/// channel of every window to zero mean and unit standard deviation, and
/// attaches a stage when the window lies entirely inside one annotation.
/// Channels with standard deviation below 1e-8 are zeroed and the window is
/// flagged degenerate.
WindowDataset extract_windows(const Recording& rec, double window_s, LabelScheme scheme = LabelScheme::AASM,
                              std::string recording_id = {});

}  // namespace tempo::signal
