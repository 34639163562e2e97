#pragma once

#include <string>
#include <vector>

#include "tempo/signal/recording.hpp"

namespace tempo::signal {

struct PreprocessOptions {
  double cutoff_hz = 30.0;
  double target_rate_hz = 0.0;  // 0 keeps the input rate
  std::vector<std::string> keep_channels;  // empty keeps every channel
  int filter_order = 128;
};

/// Lowpass-filters the kept channels (aligned FIR) and decimates by the
/// integer ratio rec.rate_hz / target_rate_hz. Channel order follows
/// keep_channels. Annotations and metadata carry over unchanged.
Recording preprocess(const Recording& rec, const PreprocessOptions& options);

}  // namespace tempo::signal
