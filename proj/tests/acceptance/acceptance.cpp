// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a subset
// by number (default: all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gradcheck.hpp"
#include "tempo/cli/commands.hpp"
#include "tempo/cli/config.hpp"
#include "tempo/common/csv.hpp"
#include "tempo/common/log.hpp"
#include "tempo/eval/embedding.hpp"
#include "tempo/eval/experiments.hpp"
#include "tempo/eval/metrics.hpp"
#include "tempo/features/handcrafted.hpp"
#include "tempo/nn/adam.hpp"
#include "tempo/nn/losses.hpp"
#include "tempo/nn/ops.hpp"
#include "tempo/signal/edf.hpp"
#include "tempo/signal/synthetic.hpp"
#include "tempo/ssl/sampling.hpp"
#include "tempo/train/pretext_batch.hpp"
#include "tempo/train/trainer.hpp"

using namespace tempo;
using testing::DTape;
using testing::DTensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path source_dir() { return TEMPO_SOURCE_DIR; }

// ---- 1: label_rp against the literal definition ----------------------------------

std::optional<int> literal_rp(double t, double t2, double tau_pos, double tau_neg) {
  if (t == t2) return std::nullopt;
  const double d = std::abs(t - t2);
  if (d <= tau_pos) return 1;
  if (d > tau_neg) return -1;
  return std::nullopt;
}

Outcome rp_oracle() {
  const std::vector<std::pair<double, double>> taus{{240, 900}, {60, 300}, {600, 600}};
  std::size_t pairs = 0, mismatches = 0;
  for (const auto& [pos, neg] : taus) {
    const ssl::SamplerConfig cfg{.tau_pos_s = pos, .tau_neg_s = neg};
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; ++j) {
        const double t = 30.0 * i, t2 = 30.0 * j;
        mismatches += ssl::label_rp(t, t2, cfg) != literal_rp(t, t2, pos, neg);
        ++pairs;
      }
  }
  return {mismatches == 0, fmt::format("{} pairs, {} mismatches", pairs, mismatches)};
}

// ---- 2: sampler balance ------------------------------------------------------------

Outcome sampler_balance() {
  signal::SyntheticConfig g;
  g.n_states = 2;
  g.transition = {{0.8, 0.2}, {0.2, 0.8}};
  g.state_spectra = {{{0.5, 0.1, 1.0}}, {{1.5, 0.1, 1.0}}};
  g.rate_hz = 4.0;
  g.duration_s = 2000 * 30.0;
  g.seed = 3;
  const auto ds = signal::extract_windows(signal::generate_synthetic(g), 30.0);
  if (ds.size() != 2000) return {false, fmt::format("expected 2000 windows, got {}", ds.size())};
  const ssl::SamplerConfig cfg{.tau_pos_s = 240, .tau_neg_s = 900, .n_anchors_per_recording = 50,
                               .n_pos_per_anchor = 3, .n_neg_per_anchor = 3, .seed = 11};
  const auto rp = ssl::sample_rp_dataset(ds, cfg);
  const auto ts = ssl::sample_ts_dataset(ds, cfg);
  std::size_t bad = 0;
  for (const auto& e : rp.rp) bad += ssl::label_rp(ds.start_seconds(e.anchor), ds.start_seconds(e.other), cfg) != e.y;
  for (const auto& e : ts.ts) {
    const double a = ds.start_seconds(e.first), m = ds.start_seconds(e.middle), z = ds.start_seconds(e.last);
    bad += ssl::label_ts(a, m, z) != e.y;
    bad += !(z > a && z - a <= cfg.tau_pos_s);
    if (e.y < 0) bad += !(std::abs(m - a) > cfg.tau_neg_s);
  }
  auto balanced = [](const ssl::PretextDataset& d) { return d.skipped_anchors == 0 && 2 * d.positives() == d.size(); };
  const bool pass = balanced(rp) && balanced(ts) && bad == 0 && rp.size() == 300 && ts.size() == 300;
  return {pass, fmt::format("RP {}/{} positive, TS {}/{} positive, skipped {}/{}, {} invalid labels", rp.positives(),
                            rp.size(), ts.positives(), ts.size(), rp.skipped_anchors, ts.skipped_anchors, bad)};
}

// ---- 3 and 4: gradients of the composed graphs ---------------------------------------

models::ExtractorConfig toy_model() {
  return {.channels = 2, .window_samples = 64, .kernel = 5, .pool = 4, .embed_dim = 8, .dropout = 0.5};
}

DTensor toy_batch(std::size_t batch, std::uint64_t seed) {
  Rng rng(seed);
  return testing::random_tensor({batch, 2, 64}, rng, 1.0, false);
}

// Dropout draws a fresh but identical mask on every evaluation.
DTensor toy_features(DTape& tape, const models::ModelBundle<double>& b, const DTensor& x) {
  Rng rng(77);
  return models::extract_features(tape, b.extractor, b.config, x, models::Mode::Train, rng);
}

Outcome gradient_fidelity() {
  const auto cfg = toy_model();
  const auto x1 = toy_batch(2, 1), x2 = toy_batch(2, 2), x3 = toy_batch(2, 3);
  const std::vector<int> y{1, -1};
  std::vector<std::string> parts;
  double worst = 0.0;
  std::size_t checked = 0;
  auto record = [&](const char* name, const testing::GradCheck& g) {
    worst = std::max(worst, g.worst_relative);
    checked += g.checked;
    parts.push_back(fmt::format("{} {:.1e}", name, g.worst_relative));
  };

  auto rp = models::make_bundle<double>(models::ModelTask::RP, cfg, 1);
  record("RP", testing::check_gradients(
                   [&](DTape& t) {
                     const auto g = models::contrast_rp(t, toy_features(t, rp, x1), toy_features(t, rp, x2));
                     const auto s = models::pretext_score(t, g, rp.head.at("contrast.weight"), rp.head.at("contrast.bias"));
                     return nn::binary_logistic_loss(t, s, std::span<const int>(y));
                   },
                   rp.parameters()));

  auto ts = models::make_bundle<double>(models::ModelTask::TS, cfg, 2);
  record("TS", testing::check_gradients(
                   [&](DTape& t) {
                     const auto g = models::contrast_ts(t, toy_features(t, ts, x1), toy_features(t, ts, x2),
                                                        toy_features(t, ts, x3));
                     const auto s = models::pretext_score(t, g, ts.head.at("contrast.weight"), ts.head.at("contrast.bias"));
                     return nn::binary_logistic_loss(t, s, std::span<const int>(y));
                   },
                   ts.parameters()));

  auto ae = models::make_bundle<double>(models::ModelTask::AE, cfg, 3);
  record("AE", testing::check_gradients(
                   [&](DTape& t) {
                     const auto r = models::decode_autoencoder(t, ae.head, ae.config, toy_features(t, ae, x1));
                     return nn::mse_loss(t, r, x1);
                   },
                   ae.parameters()));

  auto sup = models::make_bundle<double>(models::ModelTask::Supervised, cfg, 4);
  // Non-zero head so that the extractor receives gradient.
  Rng head_rng(9);
  for (const auto& e : sup.head.entries()) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto& v : e.tensor.values()) v = u(head_rng);
  }
  const std::vector<std::size_t> targets{1, 3};
  const std::vector<double> weights{1.0, 0.5, 2.0, 1.5, 1.0};
  record("supervised", testing::check_gradients(
                           [&](DTape& t) {
                             const auto z = models::supervised_logits(t, sup.head, toy_features(t, sup, x1));
                             return nn::weighted_cross_entropy(t, z, std::span<const std::size_t>(targets),
                                                               std::span<const double>(weights));
                           },
                           sup.parameters()));

  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : ", ") + p;
  return {worst < 1e-6, fmt::format("worst relative error {:.2e} over {} coordinates ({})", worst, checked, detail)};
}

Outcome siamese_sharing() {
  const auto cfg = toy_model();
  signal::WindowDataset ds;
  ds.channels = 2;
  ds.window_samples = 64;
  ds.rate_hz = 16.0;
  ds.channel_names = {"a", "b"};
  ds.recordings.push_back({"r", "s", std::nullopt});
  Rng rng(4);
  std::normal_distribution<double> g;
  for (std::size_t w = 0; w < 12; ++w) {
    signal::Window win;
    win.start_sample = static_cast<std::int64_t>(w * 64);
    for (std::size_t i = 0; i < 128; ++i) win.data.push_back(static_cast<float>(g(rng)));
    ds.windows.push_back(std::move(win));
  }
  // Windows repeat across pairs so that the shared path deduplicates them.
  ssl::PretextDataset data;
  data.task = ssl::PretextTask::RP;
  data.rp = {{0, 1, 1}, {1, 2, 1}, {0, 9, -1}, {5, 11, -1}, {2, 5, 1}, {9, 0, -1}};
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  auto shared = models::make_bundle<double>(models::ModelTask::RP, cfg, 6);
  const auto batch = train::make_pretext_batch(data, all);
  {
    DTape tape;
    Rng unused(0);
    const auto h = models::extract_features(tape, shared.extractor, cfg, models::stack_windows<double>(ds, batch.windows),
                                            models::Mode::Eval, unused);
    const auto s = train::batch_scores(tape, shared, h, batch, ssl::PretextTask::RP);
    tape.backward(nn::binary_logistic_loss(tape, s, std::span<const int>(batch.labels)));
  }

  // Oracle: two independent copies of the extractor, one per branch.
  const auto left = shared.extractor.clone(), right = shared.extractor.clone();
  for (const auto& p : left.tensors()) p.zero_grad();
  for (const auto& p : right.tensors()) p.zero_grad();
  std::vector<std::size_t> anchors, others;
  std::vector<int> labels;
  for (const auto& e : data.rp) {
    anchors.push_back(e.anchor);
    others.push_back(e.other);
    labels.push_back(e.y);
  }
  const auto head_w = shared.head.at("contrast.weight").clone(), head_b = shared.head.at("contrast.bias").clone();
  {
    DTape tape;
    Rng unused(0);
    const auto h1 = models::extract_features(tape, left, cfg, models::stack_windows<double>(ds, anchors),
                                             models::Mode::Eval, unused);
    const auto h2 = models::extract_features(tape, right, cfg, models::stack_windows<double>(ds, others),
                                             models::Mode::Eval, unused);
    const auto s = models::pretext_score(tape, models::contrast_rp(tape, h1, h2), head_w, head_b);
    tape.backward(nn::binary_logistic_loss(tape, s, std::span<const int>(labels)));
  }
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < shared.extractor.size(); ++i) {
    const auto gs = shared.extractor.entries()[i].tensor.grad();
    const auto gl = left.entries()[i].tensor.grad(), gr = right.entries()[i].tensor.grad();
    for (std::size_t k = 0; k < gs.size(); ++k) {
      worst = std::max(worst, std::abs(gs[k] - (gl[k] + gr[k])));
      scale = std::max(scale, std::abs(gs[k]));
    }
  }
  const bool distinct_windows = batch.windows.size() < 2 * data.size();
  return {worst <= 1e-10 && scale > 0.0 && distinct_windows,
          fmt::format("max |shared - (left + right)| = {:.2e} (largest gradient {:.2e}); {} distinct windows for {} pairs",
                      worst, scale, batch.windows.size(), data.size())};
}

// ---- 5: Adam -----------------------------------------------------------------------

Outcome adam_checks() {
  std::vector<std::string> failures;
  {
    DTensor p({3}, {1.0, -2.0, 3.0}, true);
    nn::Adam<double> adam({p});
    for (int i = 0; i < 10; ++i) {
      auto g = p.grad();
      std::ranges::fill(g, 0.0);
      adam.step();
    }
    if (!(p.values()[0] == 1.0 && p.values()[1] == -2.0 && p.values()[2] == 3.0)) failures.push_back("zero-grad moved");
  }
  double first_step = 0.0;
  {
    DTensor p({2}, {0.5, -0.5}, true);
    nn::Adam<double> adam({p}, {.lr = 1e-3});
    p.grad()[0] = 1.0;
    p.grad()[1] = -1.0;
    adam.step();
    first_step = 0.5 - p.values()[0];
    if (std::abs(first_step - 1e-3) > 1e-6 || std::abs((p.values()[1] + 0.5) - 1e-3) > 1e-6) {
      failures.push_back(fmt::format("first step {:.9f}", first_step));
    }
  }
  double final_theta = 0.0;
  {
    DTensor th({1}, {1.0}, true);
    nn::Adam<double> adam({th}, {.lr = 0.01});
    for (int i = 0; i < 200; ++i) {
      DTape tape;
      tape.backward(nn::sum(tape, nn::mul(tape, th, th)));
      adam.step();
    }
    final_theta = th.values()[0];
    if (!(std::abs(final_theta) < 0.5)) failures.push_back(fmt::format("|theta| = {}", std::abs(final_theta)));
  }
  std::string why;
  for (const auto& f : failures) why += "; " + f;
  return {failures.empty(),
          fmt::format("zero-grad fixed point, first step {:.9f}, theta after 200 steps {:.4f}{}", first_step,
                      final_theta, why)};
}

// ---- 6: loss values ----------------------------------------------------------------

Outcome loss_values() {
  auto loss_at = [](double s, int y) {
    DTape tape(false);
    const std::vector<int> labels{y};
    return nn::binary_logistic_loss(tape, DTensor({1}, {s}), std::span<const int>(labels)).item();
  };
  const double at0 = loss_at(0.0, 1), at2 = loss_at(2.0, 1);
  const double big_pos = loss_at(1000.0, 1), big_neg = loss_at(-1000.0, 1), big_wrong = loss_at(1000.0, -1);
  const bool pass = std::abs(at0 - 0.693147) <= 1e-6 && std::abs(at2 - 0.126928) <= 1e-6 && std::isfinite(big_pos) &&
                    std::isfinite(big_neg) && std::isfinite(big_wrong) && big_pos >= 0.0 &&
                    std::abs(big_neg - 1000.0) < 1e-9 && std::abs(big_wrong - 1000.0) < 1e-9;
  return {pass, fmt::format("L(+1, 0) = {:.7f}, L(+1, 2) = {:.7f}, L(+1, 1000) = {}, L(+1, -1000) = {}", at0, at2,
                            big_pos, big_neg)};
}

// ---- 7: balanced accuracy ------------------------------------------------------------

Outcome balanced_accuracy_oracle() {
  Rng rng(21);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + trial % 5;
    const std::size_t n = 1 + rng() % 100;
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
      t[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
    }
    std::vector<std::vector<double>> confusion(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < n; ++i) confusion[t[i]][p[i]] += 1.0;
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < k; ++c) {
      const double row = std::accumulate(confusion[c].begin(), confusion[c].end(), 0.0);
      if (row == 0.0) continue;
      sum += confusion[c][c] / row;
      ++present;
    }
    mismatches += eval::balanced_accuracy(p, t) != sum / present;
  }
  const double half = eval::balanced_accuracy(std::vector<int>{0, 0, 1, 0}, std::vector<int>{0, 0, 1, 1});
  return {mismatches == 0 && half == 0.75,
          fmt::format("{} mismatches in 1000 cases; recalls (1.0, 0.5) give {}", mismatches, half)};
}

// ---- 8: handcrafted features -----------------------------------------------------------

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

std::vector<double> sinusoid(double f, double rate, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / rate);
  return x;
}

Outcome handcrafted_bank() {
  std::vector<std::string> failures;
  for (std::size_t C : {1u, 2u, 3u}) {
    signal::WindowDataset layout;
    layout.channels = C;
    layout.window_samples = 3000;
    layout.rate_hz = 100.0;
    signal::Window w;
    for (std::size_t c = 0; c < C; ++c) {
      layout.channel_names.push_back("ch" + std::to_string(c));
      for (double v : white_noise(3000, c)) w.data.push_back(static_cast<float>(v));
    }
    const auto f = features::compute_feature_vector(w, layout);
    if (f.values.size() != 34 * C || f.names.size() != 34 * C) failures.push_back(fmt::format("length at C={}", C));
  }
  const auto bands = features::band_log_powers(sinusoid(10.0, 100.0, 3000), 100.0);
  const auto argmax = std::ranges::max_element(bands) - bands.begin();
  if (argmax != 2) failures.push_back(fmt::format("10 Hz argmax band {}", argmax));
  double hurst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) hurst += features::hurst_exponent(white_noise(3000, 100 + s)) / 20.0;
  if (!(hurst >= 0.4 && hurst <= 0.6)) failures.push_back("Hurst");
  const double apen = features::approximate_entropy(std::vector<double>(1000, 2.5));
  if (apen != 0.0) failures.push_back("ApEn");
  const double hjorth = features::hjorth_complexity(sinusoid(5.0, 100.0, 3000));
  if (std::abs(hjorth - 1.0) > 0.02) failures.push_back("Hjorth");
  std::string why;
  for (const auto& f : failures) why += "; " + f;
  return {failures.empty(), fmt::format("34 per channel, 10 Hz sine peaks in band {}, Hurst(noise) {:.3f}, "
                                        "ApEn(constant) {}, Hjorth(5 Hz sine) {:.4f}{}",
                                        argmax, hurst, apen, hjorth, why)};
}

// ---- 9: EDF ------------------------------------------------------------------------

Outcome edf_checks() {
  signal::EdfFile f;
  f.header.patient = "X";
  f.header.recording = "Startdate 01-JAN-2000 fixture";
  f.header.record_count = 3;
  f.header.record_duration_s = 2.0;
  std::size_t sig = 0;
  for (std::size_t per_record : {200u, 50u}) {
    signal::EdfSignalHeader h;
    h.label = "EEG " + std::to_string(sig);
    h.physical_dimension = "uV";
    h.physical_min = -250.0;
    h.physical_max = 250.0;
    h.samples_per_record = per_record;
    f.signals.push_back(h);
    std::vector<std::int16_t> v(3 * per_record);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::int16_t>((i * 2654435761u + sig) % 65536);
    f.samples.push_back(v);
    ++sig;
  }
  const auto bytes = signal::write_edf_file(f);
  const auto back = signal::parse_edf_file(bytes);
  const bool identical = back.samples == f.samples && signal::write_edf_file(back) == bytes;
  const double zero = f.signals[0].physical(0);
  f.samples[0].assign(f.samples[0].size(), 0);
  const auto rec = signal::parse_edf(signal::write_edf_file(f));
  const double parsed = rec.signals.at(0).at(0);
  const bool scaled = std::abs(zero - 0.003815) <= 1e-6 && std::abs(parsed - 0.003815) <= 1e-6;
  return {identical && scaled, fmt::format("{} bytes re-encode {}; digital 0 -> {:.6f} uV (parsed {:.6f})",
                                           bytes.size(), identical ? "identically" : "differently", zero, parsed)};
}

// ---- 10: synthetic end-to-end reproduction -------------------------------------------

struct Run10 {
  cli::ExperimentConfig cfg;
  eval::SweepResult sweep;
  std::vector<eval::CurveRow> curve;
};

cli::ExperimentConfig acceptance_config(const fs::path& out_dir) {
  auto cfg = cli::parse_config(source_dir() / "configs" / "synthetic_acceptance.json");
  cfg.output_dir = out_dir;
  return cfg;
}

Outcome synthetic_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = acceptance_config("acceptance_runs");
  const auto ds = cli::ingest(cfg);
  const auto train = ds.subset_by_subjects(cfg.splits.train);
  const auto valid = ds.subset_by_subjects(cfg.splits.valid);
  const auto test = ds.subset_by_subjects(cfg.splits.test);
  eval::check_disjoint(train, valid, test);

  models::ExtractorConfig model = cfg.model;
  model.channels = ds.channels;
  model.window_samples = ds.window_samples;

  eval::SweepInputs in;
  in.train = &train;
  in.valid = &valid;
  in.test = &test;
  in.sampler = cfg.sampler;
  in.sampler.seed = cfg.seed;
  in.model = model;
  in.pretext = cfg.train;
  in.probe = cfg.probe;
  const std::vector<std::pair<double, double>> taus{{240.0, 900.0}, {7200.0, 7200.0}};
  const auto sweep = eval::run_tau_sweep(taus, ssl::PretextTask::RP, in);

  const auto rand = models::make_bundle<float>(models::ModelTask::RP, model, mix_seed(cfg.seed, 0xa11d));
  const auto ltrain = eval::labeled_subset(train), lvalid = eval::labeled_subset(valid),
             ltest = eval::labeled_subset(test);
  eval::CurveInputs ci;
  ci.train = &ltrain;
  ci.valid = &lvalid;
  ci.test = &ltest;
  ci.bundles[eval::Method::RP] = &sweep.bundles[0];
  ci.bundles[eval::Method::RandInit] = &rand;
  ci.model = model;
  ci.probe = cfg.probe;
  const std::vector<eval::Method> methods{eval::Method::RP, eval::Method::RandInit};
  const std::vector<std::optional<std::size_t>> budgets{1, std::nullopt};
  const auto rows = eval::run_lowdata_curve(methods, budgets, 3, ci, cfg.seed);

  auto mean_of = [&](const char* method, std::optional<std::size_t> budget) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.method == method && r.n_per_class == budget) {
        s += r.balanced_accuracy;
        ++n;
      }
    return s / n;
  };
  const double pretext = sweep.rows[0].bal_acc_ssl, pretext_far = sweep.rows[1].bal_acc_ssl;
  const double rp_all = mean_of("rp", std::nullopt), rp_one = mean_of("rp", 1), rand_one = mean_of("rand", 1);
  const double rand_all = mean_of("rand", std::nullopt);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool a = pretext >= 0.75;
  const bool b = rp_all >= 0.85 && rp_one - rand_one >= 0.15;
  const bool c = pretext - pretext_far >= 0.10;
  return {a && b && c,
          fmt::format("(a) pretext {:.3f} [{}]; (b) RP probe ALL {:.3f}, 1/class {:.3f} vs rand-init {:.3f} "
                      "(rand-init ALL {:.3f}) [{}]; (c) tau 120/120 min pretext {:.3f} [{}]; {} windows, {:.0f} s",
                      pretext, a ? "ok" : "below", rp_all, rp_one, rand_one, rand_all, b ? "ok" : "below",
                      pretext_far, c ? "ok" : "below", ds.size(), seconds)};
}

// ---- 11: autoencoder frequency bias ------------------------------------------------------

signal::WindowDataset tone_set(std::vector<std::vector<double>> transition, std::vector<double> peaks,
                               double hours, std::uint64_t seed) {
  signal::SyntheticConfig g;
  g.n_states = peaks.size();
  g.transition = std::move(transition);
  for (double f : peaks) g.state_spectra.push_back({{f, 0.5, 1.0}});
  g.rate_hz = 100.0;
  g.channels = 2;
  g.noise_std = 0.1;
  g.duration_s = hours * 3600.0;
  g.seed = seed;
  g.subject_id = "tone" + std::to_string(seed);
  return signal::extract_windows(signal::generate_synthetic(g), 5.0, signal::LabelScheme::AASM, g.subject_id);
}

Outcome autoencoder_bias() {
  const std::vector<std::vector<double>> mixed{{0.75, 0.25}, {0.25, 0.75}};
  const auto train = tone_set(mixed, {1.0, 20.0}, 1.0, 31);
  const auto valid = tone_set(mixed, {1.0, 20.0}, 0.25, 32);
  const auto low = tone_set(mixed, {1.0, 1.0}, 0.25, 33);
  const auto high = tone_set(mixed, {20.0, 20.0}, 0.25, 34);
  const models::ExtractorConfig model{.channels = 2, .window_samples = 500, .kernel = 25, .pool = 4,
                                      .embed_dim = 100, .dropout = 0.5};
  const train::TrainConfig cfg{.batch_size = 32, .max_epochs = 30, .patience_epochs = 10, .lr = 1e-3, .seed = 4};
  const auto fit = train::fit_autoencoder(train, valid, model, cfg);
  const double mse_low = train::reconstruction_mse(fit.bundle, low);
  const double mse_high = train::reconstruction_mse(fit.bundle, high);
  const double margin = (mse_high - mse_low) / mse_high;
  return {margin >= 0.20, fmt::format("held-out MSE 1 Hz {:.4f}, 20 Hz {:.4f}, relative margin {:.1f}% "
                                      "(best epoch {} of {})",
                                      mse_low, mse_high, 100.0 * margin, fit.history.best_epoch,
                                      fit.history.stopped_epoch)};
}

// ---- 12: CLI determinism -------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

Outcome cli_determinism() {
  const fs::path out = fs::absolute("acceptance_runs");
  const std::string config = (source_dir() / "configs" / "synthetic_acceptance.json").string();
  const std::vector<std::string> common{"-c", config, "--out", out.string(), "--run-name", "determinism",
                                        "--set", "train.max_epochs=2", "--set", "train.patience_epochs=2",
                                        "--set", "sampler.n_anchors=200", "--set", "probe.max_epochs=30"};
  const std::vector<std::vector<std::string>> commands{
      {"ingest"},
      {"pretrain", "--task", "rp"},
      {"pretrain", "--task", "ts"},
      {"pretrain", "--task", "ae"},
      {"train-supervised"},
      {"probe", "--features", "rp", "--n-per-class", "1"},
      {"curve"},
      {"sweep"},
      {"embed", "--features", "rp"},
      {"synth"},
  };
  const fs::path run_dir = out / "determinism";
  fs::remove_all(run_dir);
  auto run_all = [&]() -> std::string {
    for (const auto& c : commands) {
      std::vector<std::string> args = c;
      args.insert(args.end(), common.begin(), common.end());
      std::ostringstream o, e;
      if (cli::run_command(args, o, e) != 0) return c[0] + " failed: " + e.str();
    }
    return {};
  };
  if (auto err = run_all(); !err.empty()) return {false, err};
  const auto first = snapshot(run_dir);
  if (auto err = run_all(); !err.empty()) return {false, err};
  const auto second = snapshot(run_dir);
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) differing.push_back(name);
  }
  std::size_t total = 0;
  for (const auto& [name, bytes] : first) total += bytes.size();
  std::string list;
  for (const auto& d : differing) list += " " + d;
  return {differing.empty() && first.size() == second.size() && !first.empty(),
          fmt::format("{} commands, {} artifacts ({} bytes) compared{}{}", commands.size(), first.size(), total,
                      differing.empty() ? "" : "; differing:", list)};
}

struct Criterion {
  int number;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  set_log_level(LogLevel::Warn);
  const std::vector<Criterion> criteria{
      {1, "relative-positioning labels match the literal definition", rp_oracle},
      {2, "pretext datasets are balanced and their labels re-validate", sampler_balance},
      {3, "reverse-mode gradients of the composed graphs match finite differences", gradient_fidelity},
      {4, "shared-extractor gradient equals the duplicated-parameter sum", siamese_sharing},
      {5, "Adam fixed point, first step and convergence", adam_checks},
      {6, "binary logistic loss values and overflow safety", loss_values},
      {7, "balanced accuracy matches the confusion-matrix oracle", balanced_accuracy_oracle},
      {8, "handcrafted feature bank", handcrafted_bank},
      {9, "EDF round trip and physical scaling", edf_checks},
      {10, "synthetic end-to-end: pretext accuracy, low-data probe gain, tau degradation", synthetic_reproduction},
      {11, "autoencoder favours low frequencies", autoencoder_bias},
      {12, "CLI reruns produce byte-identical artifacts", cli_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("{} {:>2}  {}: {} [{:.2f} s]\n", o.pass ? "PASS" : "FAIL", c.number, c.title, o.detail, s);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
