#include "tempo/signal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "tempo/common/error.hpp"
#include "tempo/common/random.hpp"
#include "tempo/signal/spectrum.hpp"
#include "tempo/signal/stages.hpp"

namespace tempo::signal {

namespace {

constexpr std::string_view kStateLabels[] = {"Sleep stage W", "Sleep stage 1", "Sleep stage 2", "Sleep stage 3",
                                             "Sleep stage R"};

/// Unit-amplitude narrowband component: sinusoid plus band-limited noise, both of
/// mean square 1/2.
void add_component(std::vector<double>& out, std::size_t offset, std::size_t n, double rate_hz,
                   const SpectralComponent& comp, double gain, Rng& rng) {
  if (gain == 0.0 || comp.amplitude == 0.0) return;
  const double a = gain * comp.amplitude;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double phi = phase(rng);
  const double w = 2.0 * std::numbers::pi * comp.center_hz / rate_hz;
  for (std::size_t i = 0; i < n; ++i) out[offset + i] += a * std::sin(w * static_cast<double>(i) + phi);
  if (comp.bandwidth_hz <= 0.0) return;

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::complex<double>> spec(n / 2 + 1, {0.0, 0.0});
  const double lo = comp.center_hz - comp.bandwidth_hz / 2.0;
  const double hi = comp.center_hz + comp.bandwidth_hz / 2.0;
  bool any = false;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double f = bin_frequency(k, n, rate_hz);
    if (f < lo || f > hi) continue;
    const double re = gauss(rng);
    const double im = gauss(rng);
    spec[k] = {re, im};
    any = true;
  }
  if (!any) {
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(comp.center_hz * static_cast<double>(n) / rate_hz)), 1,
        spec.size() - 1);
    spec[k] = {gauss(rng), gauss(rng)};
  }
  const auto noise = inverse_real_fft(spec, n);
  double ms = 0.0;
  for (double v : noise) ms += v * v;
  ms /= static_cast<double>(n);
  if (ms <= 0.0) return;
  const double scale = a * std::sqrt(0.5 / ms);
  for (std::size_t i = 0; i < n; ++i) out[offset + i] += scale * noise[i];
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_states < 2) throw ConfigError("synthetic: n_states must be >= 2");
  if (transition.size() != n_states) throw ConfigError("synthetic: transition matrix needs n_states rows");
  for (std::size_t i = 0; i < n_states; ++i) {
    if (transition[i].size() != n_states) throw ConfigError("synthetic: transition row " + std::to_string(i) + " has the wrong width");
    double s = 0.0;
    for (double p : transition[i]) {
      if (!(p >= 0.0)) throw ConfigError("synthetic: transition probabilities must be >= 0");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("synthetic: transition row " + std::to_string(i) + " does not sum to 1");
  }
  if (state_spectra.size() != n_states) throw ConfigError("synthetic: need one spectrum list per state");
  for (const auto& comps : state_spectra) {
    for (const auto& c : comps) {
      if (!(c.amplitude >= 0.0)) throw ConfigError("synthetic: amplitudes must be >= 0");
      if (!(c.bandwidth_hz >= 0.0)) throw ConfigError("synthetic: bandwidths must be >= 0");
      if (!(c.center_hz > 0.0 && c.center_hz < rate_hz / 2.0)) throw ConfigError("synthetic: component center must lie below Nyquist");
    }
  }
  for (const auto& s : slow_components) {
    if (!(s.band.amplitude >= 0.0)) throw ConfigError("synthetic: amplitudes must be >= 0");
    if (!(s.timescale_s > 0.0)) throw ConfigError("synthetic: slow component timescale must be positive");
    if (!(s.band.center_hz > 0.0 && s.band.center_hz < rate_hz / 2.0)) throw ConfigError("synthetic: component center must lie below Nyquist");
  }
  if (!(rate_hz > 0.0)) throw ConfigError("synthetic: rate must be positive");
  if (!(duration_s > 0.0)) throw ConfigError("synthetic: duration must be positive");
  if (channels < 1) throw ConfigError("synthetic: need at least one channel");
  if (!(noise_std >= 0.0)) throw ConfigError("synthetic: noise_std must be >= 0");
  const double block = block_s * rate_hz;
  if (!(block_s > 0.0) || std::abs(block - std::round(block)) > 1e-9) {
    throw ConfigError("synthetic: block length must be a whole number of samples");
  }
}

std::string synthetic_state_label(std::size_t state) {
  if (state < std::size(kStateLabels)) return std::string(kStateLabels[state]);
  return "state " + std::to_string(state);
}

Recording generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto block_n = static_cast<std::size_t>(std::llround(cfg.block_s * cfg.rate_hz));
  const auto total = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.rate_hz));
  const std::size_t blocks = (total + block_n - 1) / block_n;

  Rng state_rng = make_rng(cfg.seed, 0);
  std::vector<std::size_t> states(blocks);
  std::uniform_int_distribution<std::size_t> first(0, cfg.n_states - 1);
  for (std::size_t b = 0; b < blocks; ++b) {
    if (b == 0) {
      states[b] = first(state_rng);
    } else {
      const auto& row = cfg.transition[states[b - 1]];
      std::discrete_distribution<std::size_t> next(row.begin(), row.end());
      states[b] = next(state_rng);
    }
  }

  // Log-amplitudes of the slow components, stationary unit-variance AR(1) per block.
  Rng slow_rng = make_rng(cfg.seed, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> slow_gain(cfg.slow_components.size(), std::vector<double>(blocks));
  for (std::size_t s = 0; s < cfg.slow_components.size(); ++s) {
    const auto& sc = cfg.slow_components[s];
    const double rho = std::exp(-cfg.block_s / sc.timescale_s);
    double z = gauss(slow_rng);
    for (std::size_t b = 0; b < blocks; ++b) {
      if (b > 0) z = rho * z + std::sqrt(1.0 - rho * rho) * gauss(slow_rng);
      slow_gain[s][b] = std::exp(sc.modulation * z);
    }
  }

  Recording rec;
  rec.rate_hz = cfg.rate_hz;
  rec.subject_id = cfg.subject_id;
  rec.age_years = cfg.age_years;
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    Rng rng = make_rng(cfg.seed, 100 + c);
    std::normal_distribution<double> white(0.0, 1.0);
    std::vector<double> x(total, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t offset = b * block_n;
      const std::size_t n = std::min(block_n, total - offset);
      for (const auto& comp : cfg.state_spectra[states[b]]) add_component(x, offset, n, cfg.rate_hz, comp, 1.0, rng);
      for (std::size_t s = 0; s < cfg.slow_components.size(); ++s) {
        add_component(x, offset, n, cfg.rate_hz, cfg.slow_components[s].band, slow_gain[s][b], rng);
      }
      if (cfg.noise_std > 0.0) {
        for (std::size_t i = 0; i < n; ++i) x[offset + i] += cfg.noise_std * white(rng);
      }
    }
    rec.signals.push_back(std::move(x));
    rec.channel_names.push_back("CH" + std::to_string(c + 1));
  }
  for (std::size_t b = 0; b < blocks; ++b) {
    const double start = static_cast<double>(b * block_n) / cfg.rate_hz;
    const double dur = static_cast<double>(std::min(block_n, total - b * block_n)) / cfg.rate_hz;
    rec.annotations.push_back({start, dur, synthetic_state_label(states[b])});
  }
  return rec;
}

std::vector<std::size_t> synthetic_states(const Recording& rec) {
  std::vector<std::size_t> out;
  out.reserve(rec.annotations.size());
  for (const auto& a : rec.annotations) {
    std::size_t state = 0;
    bool found = false;
    for (std::size_t k = 0; k < std::size(kStateLabels); ++k) {
      if (a.label == kStateLabels[k]) {
        state = k;
        found = true;
      }
    }
    if (!found) {
      constexpr std::string_view prefix = "state ";
      if (a.label.rfind(prefix, 0) != 0) throw ConfigError("not a synthetic state label: '" + a.label + "'");
      state = std::stoul(a.label.substr(prefix.size()));
    }
    out.push_back(state);
  }
  return out;
}

}  // namespace tempo::signal
