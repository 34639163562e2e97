#include "tempo/signal/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "tempo/common/error.hpp"
#include "tempo/signal/fir.hpp"

namespace tempo::signal {

void Recording::validate() const {
  if (!(rate_hz > 0.0)) throw ConfigError("recording '" + subject_id + "': sampling rate must be positive");
  if (signals.empty()) throw ConfigError("recording '" + subject_id + "' has no channels");
  if (channel_names.size() != signals.size()) {
    throw ConfigError("recording '" + subject_id + "': channel names do not match channel count");
  }
  const std::size_t m = signals.front().size();
  if (m == 0) throw ConfigError("recording '" + subject_id + "' has no samples");
  for (std::size_t c = 0; c < signals.size(); ++c) {
    if (signals[c].size() != m) {
      throw ConfigError("recording '" + subject_id + "': channel " + channel_names[c] + " has " +
                        std::to_string(signals[c].size()) + " samples, expected " + std::to_string(m));
    }
  }
}

Recording preprocess(const Recording& rec, const PreprocessOptions& options) {
  rec.validate();
  const double target = options.target_rate_hz > 0.0 ? options.target_rate_hz : rec.rate_hz;
  if (target > rec.rate_hz) {
    throw ConfigError("target rate " + std::to_string(target) + " Hz exceeds the recording rate " +
                      std::to_string(rec.rate_hz) + " Hz");
  }
  const double ratio = rec.rate_hz / target;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio) {
    throw ConfigError("decimation ratio " + std::to_string(rec.rate_hz) + "/" + std::to_string(target) +
                      " is not an integer");
  }

  std::vector<std::size_t> picks;
  if (options.keep_channels.empty()) {
    for (std::size_t c = 0; c < rec.channels(); ++c) picks.push_back(c);
  } else {
    for (const auto& name : options.keep_channels) {
      const auto it = std::find(rec.channel_names.begin(), rec.channel_names.end(), name);
      if (it == rec.channel_names.end()) {
        throw ConfigError("unknown channel '" + name + "' in recording '" + rec.subject_id + "'");
      }
      picks.push_back(static_cast<std::size_t>(it - rec.channel_names.begin()));
    }
  }

  const FirFilter fir = design_lowpass_fir(options.cutoff_hz, options.filter_order, rec.rate_hz);
  Recording out;
  out.rate_hz = rec.rate_hz / static_cast<double>(factor);
  out.subject_id = rec.subject_id;
  out.age_years = rec.age_years;
  out.annotations = rec.annotations;
  for (auto c : picks) {
    const auto filtered = filter_aligned(fir, rec.signals[c]);
    std::vector<double> decimated;
    decimated.reserve(filtered.size() / factor + 1);
    for (std::size_t i = 0; i < filtered.size(); i += factor) decimated.push_back(filtered[i]);
    out.signals.push_back(std::move(decimated));
    out.channel_names.push_back(rec.channel_names[c]);
  }
  return out;
}

}  // namespace tempo::signal
