#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "tempo/signal/windows.hpp"

namespace tempo::ssl {

enum class PretextTask { RP, TS };

std::string_view task_name(PretextTask task);

struct SamplerConfig {
  double tau_pos_s = 240.0;
  double tau_neg_s = 900.0;
  std::size_t n_anchors_per_recording = 2000;
  std::size_t n_pos_per_anchor = 3;
  std::size_t n_neg_per_anchor = 3;
  std::uint64_t seed = 0;
  /// TS negatives take their middle window from the anchor's negative context.
  /// When false any window outside [first, last] qualifies.
  bool ts_negatives_from_negative_context = true;

  /// Requires 0 < tau_pos <= tau_neg.
  void validate() const;
};

/// Pair of window indices (into the source WindowDataset) with its label.
struct RPExample {
  std::size_t anchor = 0;
  std::size_t other = 0;
  int y = 0;
};

/// Triplet of window indices; first and last lie in each other's positive context.
struct TSExample {
  std::size_t first = 0;
  std::size_t middle = 0;
  std::size_t last = 0;
  int y = 0;
};

struct PretextDataset {
  PretextTask task = PretextTask::RP;
  std::vector<RPExample> rp;  // filled when task == RP
  std::vector<TSExample> ts;  // filled when task == TS
  std::size_t anchors_drawn = 0;
  std::size_t skipped_anchors = 0;

  std::size_t size() const noexcept { return task == PretextTask::RP ? rp.size() : ts.size(); }
  bool empty() const noexcept { return size() == 0; }
  int label(std::size_t i) const { return task == PretextTask::RP ? rp.at(i).y : ts.at(i).y; }
  std::size_t positives() const;
};

/// +1 when |t - t2| <= tau_pos, -1 when |t - t2| > tau_neg, nothing in between
/// (and nothing for t == t2).
std::optional<int> label_rp(double t_s, double t2_s, const SamplerConfig& cfg);

/// +1 when t < t2 < t3, -1 when t2 < t or t2 > t3. Requires t < t3 and t2
/// distinct from both ends; throws ConfigError otherwise.
int label_ts(double t_s, double t2_s, double t3_s);

/// Per recording: anchors drawn uniformly with replacement; for each, the
/// positive partners are drawn uniformly from the positive context (anchor
/// excluded) and the negatives from the negative context. Anchors lacking
/// either context are skipped and counted.
PretextDataset sample_rp_dataset(const signal::WindowDataset& ds, const SamplerConfig& cfg);

/// Per anchor (first window): the last window is drawn from the positive
/// context after the anchor. Positive middles come from strictly between the
/// two; negative middles from the anchor's negative context. Anchors that
/// cannot supply both kinds are skipped, which keeps the labels balanced.
PretextDataset sample_ts_dataset(const signal::WindowDataset& ds, const SamplerConfig& cfg);

/// CSV `task,recording,first,middle,last,y`; middle is empty for RP.
void write_pretext_csv(const PretextDataset& data, const signal::WindowDataset& ds, std::ostream& out);

}  // namespace tempo::ssl
