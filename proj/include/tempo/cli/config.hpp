#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tempo/eval/experiments.hpp"
#include "tempo/models/networks.hpp"
#include "tempo/signal/preprocess.hpp"
#include "tempo/signal/stages.hpp"
#include "tempo/signal/synthetic.hpp"
#include "tempo/ssl/sampling.hpp"
#include "tempo/train/trainer.hpp"

namespace tempo::cli {

struct SyntheticSubject {
  std::string id;
  std::uint64_t seed = 0;
  double hours = 8.0;
  std::optional<double> age_years;
};

struct EdfSource {
  std::filesystem::path directory;
  std::string pattern = ".edf";            // file-name suffix of recordings
  std::string sidecar = "{stem}.hyp.tsv";  // hypnogram next to each recording
  signal::LabelScheme scheme = signal::LabelScheme::AASM;
  std::map<std::string, double> ages;      // by subject id
};

struct DatasetSpec {
  enum class Kind { Edf, Synthetic } kind = Kind::Synthetic;
  EdfSource edf;
  signal::SyntheticConfig synthetic;  // template; per-subject seed, length and id applied on top
  std::vector<SyntheticSubject> subjects;
};

struct ExperimentSpec {
  std::vector<eval::Method> methods{eval::Method::RP, eval::Method::TS, eval::Method::AE, eval::Method::RandInit,
                                    eval::Method::Supervised, eval::Method::Handcrafted};
  std::vector<std::optional<std::size_t>> budgets{1, 10, 100, 500, std::nullopt};
  std::size_t n_seeds = 3;
  std::vector<std::pair<double, double>> tau_pairs{{120, 120}, {240, 900}, {7200, 7200}};
  ssl::PretextTask sweep_task = ssl::PretextTask::RP;
  std::string embed_features = "ts";
};

struct ExperimentConfig {
  std::string run_name = "run";
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  signal::PreprocessOptions preprocess;
  double window_s = 30.0;
  ssl::SamplerConfig sampler;
  models::ExtractorConfig model;  // channels and window length are filled from the data
  train::TrainConfig train;
  train::TrainConfig probe;
  eval::SubjectSplits splits;
  ExperimentSpec experiments;

  std::filesystem::path run_dir() const { return output_dir / run_name; }
  std::filesystem::path window_cache() const { return run_dir() / "windows.tcwd"; }
  std::filesystem::path checkpoint(std::string_view task) const;
};

/// Parses a JSON document. Defaults fill absent keys; unknown keys log a
/// warning that names the closest known key; a missing required key or an
/// invalid value throws ConfigError naming it.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Applies `dotted.key=value` overrides to the JSON before parsing.
ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

/// Validates ranges, split disjointness and referenced paths.
void validate(const ExperimentConfig& cfg);

/// Closest key by edit distance (for diagnostics).
std::string nearest_key(const std::string& key, const std::vector<std::string>& known);

}  // namespace tempo::cli
