#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tempo/common/error.hpp"
#include "tempo/ssl/sampling.hpp"

using namespace tempo;
using namespace tempo::ssl;

namespace {

// Layout-only dataset: 30-s windows at 1 Hz.
signal::WindowDataset grid(std::vector<std::size_t> windows_per_recording) {
  signal::WindowDataset ds;
  ds.channels = 1;
  ds.window_samples = 30;
  ds.rate_hz = 1.0;
  ds.channel_names = {"x"};
  for (std::size_t r = 0; r < windows_per_recording.size(); ++r) {
    ds.recordings.push_back({"rec" + std::to_string(r), "s" + std::to_string(r), std::nullopt});
    for (std::size_t i = 0; i < windows_per_recording[r]; ++i) {
      signal::Window w;
      w.data.assign(30, 0.0f);
      w.start_sample = static_cast<std::int64_t>(i * 30);
      w.recording = r;
      ds.windows.push_back(std::move(w));
    }
  }
  return ds;
}

void check_consistent(const PretextDataset& data, const signal::WindowDataset& ds, const SamplerConfig& cfg) {
  if (data.task == PretextTask::RP) {
    for (const auto& e : data.rp) {
      REQUIRE(ds.windows[e.anchor].recording == ds.windows[e.other].recording);
      const auto y = label_rp(ds.start_seconds(e.anchor), ds.start_seconds(e.other), cfg);
      REQUIRE(y.has_value());
      CHECK(*y == e.y);
    }
  } else {
    for (const auto& e : data.ts) {
      REQUIRE(ds.windows[e.first].recording == ds.windows[e.middle].recording);
      REQUIRE(ds.windows[e.first].recording == ds.windows[e.last].recording);
      const double t = ds.start_seconds(e.first), t3 = ds.start_seconds(e.last);
      CHECK(t < t3);
      CHECK(t3 - t <= cfg.tau_pos_s);
      CHECK(label_ts(t, ds.start_seconds(e.middle), t3) == e.y);
    }
  }
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("label_rp examples and brute-force agreement") {
    SamplerConfig cfg;
    cfg.tau_pos_s = 240;
    cfg.tau_neg_s = 900;
    CHECK(label_rp(0, 120, cfg) == 1);
    CHECK(label_rp(0, 1200, cfg) == -1);
    CHECK_FALSE(label_rp(0, 600, cfg).has_value());
    CHECK(label_rp(0, 240, cfg) == 1);
    CHECK_FALSE(label_rp(0, 900, cfg).has_value());
    CHECK_FALSE(label_rp(30, 30, cfg).has_value());

    for (auto [p, n] : {std::pair{60.0, 60.0}, {240.0, 900.0}, {7200.0, 7200.0}}) {
      cfg.tau_pos_s = p;
      cfg.tau_neg_s = n;
      for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 200; ++j) {
          const double t = 30.0 * i, t2 = 30.0 * j;
          std::optional<int> want;
          if (i != j && std::abs(t - t2) <= p) want = 1;
          if (i != j && std::abs(t - t2) > n) want = -1;
          REQUIRE(label_rp(t, t2, cfg) == want);
          REQUIRE(label_rp(t2, t, cfg) == want);
        }
      }
    }
  }

  TEST_CASE("label_ts") {
    CHECK(label_ts(0, 60, 120) == 1);
    CHECK(label_ts(60, 0, 120) == -1);
    CHECK(label_ts(0, 150, 120) == -1);
    CHECK_THROWS_AS(label_ts(0, 0, 120), ConfigError);
    CHECK_THROWS_AS(label_ts(0, 120, 120), ConfigError);
    CHECK_THROWS_AS(label_ts(120, 60, 0), ConfigError);
  }

  TEST_CASE("config validation") {
    SamplerConfig cfg;
    cfg.tau_pos_s = 900;
    cfg.tau_neg_s = 240;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.tau_pos_s = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.tau_pos_s = 120;
    cfg.tau_neg_s = 120;
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("RP quota and balance") {
    const auto ds = grid({100});
    SamplerConfig cfg;
    cfg.tau_pos_s = 120;
    cfg.tau_neg_s = 300;
    cfg.n_anchors_per_recording = 10;
    cfg.seed = 7;
    const auto data = sample_rp_dataset(ds, cfg);
    CHECK(data.size() == 60);
    CHECK(data.positives() == 30);
    CHECK(data.skipped_anchors == 0);
    check_consistent(data, ds, cfg);
    for (const auto& e : data.rp) CHECK(e.anchor != e.other);
  }

  TEST_CASE("edge anchors draw negatives from the only side that has them") {
    const auto ds = grid({40});
    SamplerConfig cfg;
    cfg.tau_pos_s = 240;
    cfg.tau_neg_s = 900;
    cfg.n_anchors_per_recording = 400;
    const auto data = sample_rp_dataset(ds, cfg);
    std::size_t first_anchor_negatives = 0;
    for (const auto& e : data.rp) {
      if (e.anchor != 0 || e.y != -1) continue;
      ++first_anchor_negatives;
      // Valid candidates for an anchor at t = 0: windows starting after 900 s.
      CHECK(ds.start_seconds(e.other) > 900.0);
      CHECK(e.other > e.anchor);
    }
    CHECK(first_anchor_negatives > 0);
    check_consistent(data, ds, cfg);
  }

  TEST_CASE("empty positive context skips every anchor") {
    const auto ds = grid({50});
    SamplerConfig cfg;
    cfg.tau_pos_s = 10;
    cfg.tau_neg_s = 300;
    cfg.n_anchors_per_recording = 25;
    const auto data = sample_rp_dataset(ds, cfg);
    CHECK(data.empty());
    CHECK(data.skipped_anchors == 25);
    CHECK(data.anchors_drawn == 25);
  }

  TEST_CASE("TS examples are consistent and balanced") {
    const auto ds = grid({2000});
    SamplerConfig cfg;
    cfg.tau_pos_s = 240;
    cfg.tau_neg_s = 900;
    cfg.n_anchors_per_recording = 50;
    cfg.seed = 3;
    const auto data = sample_ts_dataset(ds, cfg);
    check_consistent(data, ds, cfg);
    if (data.skipped_anchors == 0) {
      CHECK(data.size() == 300);
      CHECK(data.positives() == 150);
    }
    for (const auto& e : data.ts) {
      if (e.y == -1) CHECK(std::abs(ds.start_seconds(e.middle) - ds.start_seconds(e.first)) > cfg.tau_neg_s);
    }
    cfg.ts_negatives_from_negative_context = false;
    check_consistent(sample_ts_dataset(ds, cfg), ds, cfg);
  }

  TEST_CASE("TS needs a gap between first and last") {
    const auto ds = grid({60});
    SamplerConfig cfg;
    cfg.tau_pos_s = 30;
    cfg.tau_neg_s = 300;
    cfg.n_anchors_per_recording = 20;
    const auto data = sample_ts_dataset(ds, cfg);
    CHECK(data.empty());
    CHECK(data.skipped_anchors == 20);
  }

  TEST_CASE("sampling is deterministic and stays within recordings") {
    const auto ds = grid({120, 80, 150});
    SamplerConfig cfg;
    cfg.tau_pos_s = 120;
    cfg.tau_neg_s = 600;
    cfg.n_anchors_per_recording = 40;
    cfg.seed = 99;
    for (auto sampler : {&sample_rp_dataset, &sample_ts_dataset}) {
      const auto a = sampler(ds, cfg);
      const auto b = sampler(ds, cfg);
      std::ostringstream sa, sb;
      write_pretext_csv(a, ds, sa);
      write_pretext_csv(b, ds, sb);
      CHECK(sa.str() == sb.str());
      check_consistent(a, ds, cfg);
      cfg.seed = 100;
      std::ostringstream sc;
      write_pretext_csv(sampler(ds, cfg), ds, sc);
      CHECK(sc.str() != sa.str());
      cfg.seed = 99;
    }
  }

  TEST_CASE("pretext CSV layout") {
    const auto ds = grid({100});
    SamplerConfig cfg;
    cfg.tau_pos_s = 120;
    cfg.tau_neg_s = 300;
    cfg.n_anchors_per_recording = 1;
    std::ostringstream out;
    write_pretext_csv(sample_rp_dataset(ds, cfg), ds, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "task,recording,first,middle,last,y");
    std::getline(in, line);
    CHECK(line.rfind("RP,rec0,", 0) == 0);
    CHECK(line.find(",,") != std::string::npos);
  }
}
