#include "tempo/signal/windows.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tempo/common/error.hpp"

namespace tempo::signal {

double WindowDataset::start_seconds(std::size_t window) const {
  return static_cast<double>(windows.at(window).start_sample) / rate_hz;
}

std::vector<std::vector<std::size_t>> WindowDataset::windows_by_recording() const {
  std::vector<std::vector<std::size_t>> groups(recordings.size());
  for (std::size_t i = 0; i < windows.size(); ++i) groups.at(windows[i].recording).push_back(i);
  return groups;
}

void WindowDataset::append(WindowDataset&& other) {
  if (other.windows.empty() && other.recordings.empty()) return;
  if (recordings.empty() && windows.empty()) {
    *this = std::move(other);
    return;
  }
  if (other.channels != channels || other.window_samples != window_samples || other.rate_hz != rate_hz) {
    throw ShapeError("cannot merge window datasets with different layouts");
  }
  const std::size_t offset = recordings.size();
  for (auto& r : other.recordings) recordings.push_back(std::move(r));
  for (auto& w : other.windows) {
    w.recording += offset;
    windows.push_back(std::move(w));
  }
}

WindowDataset WindowDataset::subset_by_subjects(std::span<const std::string> subjects) const {
  const std::set<std::string> wanted(subjects.begin(), subjects.end());
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (wanted.count(recordings[windows[i].recording].subject_id)) picks.push_back(i);
  }
  return subset(picks);
}

WindowDataset WindowDataset::subset(std::span<const std::size_t> window_indices) const {
  WindowDataset out;
  out.channels = channels;
  out.window_samples = window_samples;
  out.rate_hz = rate_hz;
  out.channel_names = channel_names;
  std::map<std::size_t, std::size_t> remap;
  for (auto i : window_indices) {
    Window w = windows.at(i);
    auto [it, inserted] = remap.emplace(w.recording, out.recordings.size());
    if (inserted) out.recordings.push_back(recordings[w.recording]);
    w.recording = it->second;
    out.windows.push_back(std::move(w));
  }
  return out;
}

std::vector<std::string> WindowDataset::subjects() const {
  std::vector<std::string> out;
  for (const auto& r : recordings) {
    if (std::find(out.begin(), out.end(), r.subject_id) == out.end()) out.push_back(r.subject_id);
  }
  return out;
}

void WindowDataset::validate() const {
  std::vector<std::int64_t> last(recordings.size(), -1);
  for (const auto& w : windows) {
    if (w.recording >= recordings.size()) throw ConfigError("window refers to an unknown recording");
    if (w.data.size() != channels * window_samples) throw ShapeError("window data does not match C x T");
    auto& prev = last[w.recording];
    if (prev >= 0 && w.start_sample - prev != static_cast<std::int64_t>(window_samples)) {
      throw ConfigError("windows of recording '" + recordings[w.recording].id +
                        "' are not back-to-back in start order");
    }
    prev = w.start_sample;
  }
}

WindowDataset extract_windows(const Recording& rec, double window_s, LabelScheme scheme, std::string recording_id) {
  rec.validate();
  const double t_exact = window_s * rec.rate_hz;
  const auto T = static_cast<std::size_t>(std::llround(t_exact));
  if (T == 0 || std::abs(t_exact - static_cast<double>(T)) > 1e-6) {
    throw ConfigError("window of " + std::to_string(window_s) + " s at " + std::to_string(rec.rate_hz) +
                      " Hz is not a whole number of samples");
  }
  const std::size_t M = rec.samples();
  if (T > M) {
    throw ConfigError("window of " + std::to_string(T) + " samples is longer than recording '" + rec.subject_id +
                      "' (" + std::to_string(M) + " samples)");
  }
  const std::size_t C = rec.channels();

  // Stage intervals in seconds, sorted by start.
  struct Interval {
    double start, end;
    SleepStage stage;
  };
  std::vector<Interval> stages;
  for (const auto& a : rec.annotations) {
    if (auto s = map_stage(a.label, scheme)) stages.push_back({a.start_s, a.start_s + a.duration_s, *s});
  }
  std::sort(stages.begin(), stages.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });

  WindowDataset ds;
  ds.channels = C;
  ds.window_samples = T;
  ds.rate_hz = rec.rate_hz;
  ds.channel_names = rec.channel_names;
  ds.recordings.push_back({recording_id.empty() ? rec.subject_id : std::move(recording_id), rec.subject_id,
                           rec.age_years});

  const std::size_t count = M / T;
  ds.windows.reserve(count);
  constexpr double kEps = 1e-9;
  for (std::size_t w = 0; w < count; ++w) {
    Window win;
    win.start_sample = static_cast<std::int64_t>(w * T);
    win.recording = 0;
    win.data.resize(C * T);
    for (std::size_t c = 0; c < C; ++c) {
      const double* x = rec.signals[c].data() + w * T;
      double mean = 0.0;
      for (std::size_t i = 0; i < T; ++i) mean += x[i];
      mean /= static_cast<double>(T);
      double var = 0.0;
      for (std::size_t i = 0; i < T; ++i) var += (x[i] - mean) * (x[i] - mean);
      const double sd = std::sqrt(var / static_cast<double>(T));
      float* dst = win.data.data() + c * T;
      if (sd < 1e-8) {
        std::fill_n(dst, T, 0.0f);
        win.degenerate = true;
      } else {
        for (std::size_t i = 0; i < T; ++i) dst[i] = static_cast<float>((x[i] - mean) / sd);
      }
    }
    const double t0 = static_cast<double>(w * T) / rec.rate_hz;
    const double t1 = static_cast<double>((w + 1) * T) / rec.rate_hz;
    auto it = std::upper_bound(stages.begin(), stages.end(), t0 + kEps,
                               [](double t, const Interval& iv) { return t < iv.start; });
    if (it != stages.begin()) {
      const Interval& iv = *std::prev(it);
      if (iv.start <= t0 + kEps && t1 <= iv.end + kEps) win.stage = iv.stage;
    }
    ds.windows.push_back(std::move(win));
  }
  return ds;
}

}  // namespace tempo::signal
