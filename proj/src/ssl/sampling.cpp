#include "tempo/ssl/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "tempo/common/error.hpp"
#include "tempo/common/log.hpp"
#include "tempo/common/random.hpp"

namespace tempo::ssl {

namespace {

/// Window positions of one recording split into the context ranges of one anchor.
/// Positions are offsets into the recording's sorted window list.
struct Contexts {
  std::size_t pos_lo = 0, pos_hi = 0;  // [pos_lo, pos_hi) has |dt| <= tau_pos (anchor included)
  std::size_t neg_left = 0;            // [0, neg_left) has dt < -tau_neg
  std::size_t neg_right = 0;           // [neg_right, n) has dt > tau_neg

  std::size_t negatives(std::size_t n) const { return neg_left + (n - neg_right); }
  std::size_t negative_at(std::size_t k) const { return k < neg_left ? k : neg_right + (k - neg_left); }
};

Contexts contexts_of(const std::vector<double>& times, std::size_t p, const SamplerConfig& cfg) {
  const double t = times[p];
  Contexts c;
  // Boundaries use the same comparisons as label_rp so the two always agree.
  c.pos_lo = static_cast<std::size_t>(
      std::partition_point(times.begin(), times.end(), [&](double x) { return !(std::abs(t - x) <= cfg.tau_pos_s) && x < t; }) -
      times.begin());
  c.pos_hi = static_cast<std::size_t>(
      std::partition_point(times.begin(), times.end(), [&](double x) { return x <= t || std::abs(x - t) <= cfg.tau_pos_s; }) -
      times.begin());
  c.neg_left = static_cast<std::size_t>(
      std::partition_point(times.begin(), times.end(), [&](double x) { return x < t && std::abs(t - x) > cfg.tau_neg_s; }) -
      times.begin());
  c.neg_right = static_cast<std::size_t>(
      std::partition_point(times.begin(), times.end(), [&](double x) { return x <= t || !(std::abs(x - t) > cfg.tau_neg_s); }) -
      times.begin());
  return c;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

struct RecordingView {
  std::vector<std::size_t> windows;  // global indices, sorted by start
  std::vector<double> times;
};

std::vector<RecordingView> recording_views(const signal::WindowDataset& ds) {
  std::vector<RecordingView> views;
  for (auto& idx : ds.windows_by_recording()) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return ds.windows[a].start_sample < ds.windows[b].start_sample;
    });
    RecordingView v;
    for (auto i : idx) v.times.push_back(ds.start_seconds(i));
    v.windows = std::move(idx);
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace

std::string_view task_name(PretextTask task) { return task == PretextTask::RP ? "RP" : "TS"; }

void SamplerConfig::validate() const {
  if (!(tau_pos_s > 0.0)) throw ConfigError("sampler: tau_pos must be positive");
  if (!(tau_neg_s > 0.0)) throw ConfigError("sampler: tau_neg must be positive");
  if (tau_pos_s > tau_neg_s) throw ConfigError("sampler: tau_pos must not exceed tau_neg");
}

std::size_t PretextDataset::positives() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += label(i) > 0;
  return n;
}

std::optional<int> label_rp(double t_s, double t2_s, const SamplerConfig& cfg) {
  if (t_s == t2_s) return std::nullopt;
  const double d = std::abs(t_s - t2_s);
  if (d <= cfg.tau_pos_s) return 1;
  if (d > cfg.tau_neg_s) return -1;
  return std::nullopt;
}

int label_ts(double t_s, double t2_s, double t3_s) {
  if (!(t_s < t3_s)) throw ConfigError("label_ts: first window must precede the last");
  if (t2_s == t_s || t2_s == t3_s) throw ConfigError("label_ts: middle window coincides with an endpoint");
  return (t_s < t2_s && t2_s < t3_s) ? 1 : -1;
}

PretextDataset sample_rp_dataset(const signal::WindowDataset& ds, const SamplerConfig& cfg) {
  cfg.validate();
  PretextDataset out;
  out.task = PretextTask::RP;
  const auto views = recording_views(ds);
  for (std::size_t r = 0; r < views.size(); ++r) {
    const auto& v = views[r];
    const std::size_t n = v.windows.size();
    if (n == 0) continue;
    Rng rng = make_rng(cfg.seed, r);
    for (std::size_t a = 0; a < cfg.n_anchors_per_recording; ++a) {
      ++out.anchors_drawn;
      const std::size_t p = uniform_index(rng, n);
      const Contexts c = contexts_of(v.times, p, cfg);
      const std::size_t n_pos = c.pos_hi - c.pos_lo - 1;  // anchor excluded
      const std::size_t n_neg = c.negatives(n);
      if (n_pos == 0 || n_neg == 0) {
        ++out.skipped_anchors;
        continue;
      }
      for (std::size_t k = 0; k < cfg.n_pos_per_anchor; ++k) {
        std::size_t q = c.pos_lo + uniform_index(rng, n_pos);
        if (q >= p) ++q;
        out.rp.push_back({v.windows[p], v.windows[q], 1});
      }
      for (std::size_t k = 0; k < cfg.n_neg_per_anchor; ++k) {
        const std::size_t q = c.negative_at(uniform_index(rng, n_neg));
        out.rp.push_back({v.windows[p], v.windows[q], -1});
      }
    }
  }
  if (out.skipped_anchors) {
    log_info("RP sampler: skipped {} of {} anchors with an empty positive or negative context", out.skipped_anchors,
             out.anchors_drawn);
  }
  return out;
}

PretextDataset sample_ts_dataset(const signal::WindowDataset& ds, const SamplerConfig& cfg) {
  cfg.validate();
  PretextDataset out;
  out.task = PretextTask::TS;
  const auto views = recording_views(ds);
  for (std::size_t r = 0; r < views.size(); ++r) {
    const auto& v = views[r];
    const std::size_t n = v.windows.size();
    if (n == 0) continue;
    Rng rng = make_rng(cfg.seed, r);
    for (std::size_t a = 0; a < cfg.n_anchors_per_recording; ++a) {
      ++out.anchors_drawn;
      const std::size_t p = uniform_index(rng, n);
      const Contexts c = contexts_of(v.times, p, cfg);
      // Last-window candidates: (p, pos_hi). Those leaving room for a middle: [p + 2, pos_hi).
      const std::size_t n_last = c.pos_hi > p + 1 ? c.pos_hi - p - 1 : 0;
      const std::size_t n_last_gap = c.pos_hi > p + 2 ? c.pos_hi - p - 2 : 0;
      const std::size_t n_neg = c.negatives(n);
      const bool negatives_possible = cfg.ts_negatives_from_negative_context ? n_neg > 0 : (p > 0 || c.pos_hi < n);
      if (n_last_gap == 0 || n_last == 0 || !negatives_possible) {
        ++out.skipped_anchors;
        continue;
      }
      for (std::size_t k = 0; k < cfg.n_pos_per_anchor; ++k) {
        const std::size_t last = p + 2 + uniform_index(rng, n_last_gap);
        const std::size_t mid = p + 1 + uniform_index(rng, last - p - 1);
        out.ts.push_back({v.windows[p], v.windows[mid], v.windows[last], 1});
      }
      for (std::size_t k = 0; k < cfg.n_neg_per_anchor; ++k) {
        const std::size_t last = p + 1 + uniform_index(rng, n_last);
        std::size_t mid = 0;
        if (cfg.ts_negatives_from_negative_context) {
          mid = c.negative_at(uniform_index(rng, n_neg));
        } else {
          // Outside [p, last]; if nothing lies beyond `last`, fall back to before p.
          const std::size_t outside = p + (n - last - 1);
          if (outside == 0) {
            ++out.skipped_anchors;
            break;
          }
          const std::size_t u = uniform_index(rng, outside);
          mid = u < p ? u : last + 1 + (u - p);
        }
        out.ts.push_back({v.windows[p], v.windows[mid], v.windows[last], -1});
      }
    }
  }
  if (out.skipped_anchors) {
    log_info("TS sampler: skipped {} of {} anchors lacking a usable positive or negative context",
             out.skipped_anchors, out.anchors_drawn);
  }
  return out;
}

void write_pretext_csv(const PretextDataset& data, const signal::WindowDataset& ds, std::ostream& out) {
  out << "task,recording,first,middle,last,y\n";
  if (data.task == PretextTask::RP) {
    for (const auto& e : data.rp) {
      out << "RP," << ds.recordings[ds.windows[e.anchor].recording].id << ',' << e.anchor << ",," << e.other << ','
          << e.y << '\n';
    }
  } else {
    for (const auto& e : data.ts) {
      out << "TS," << ds.recordings[ds.windows[e.first].recording].id << ',' << e.first << ',' << e.middle << ','
          << e.last << ',' << e.y << '\n';
    }
  }
}

}  // namespace tempo::ssl
