#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tempo/cli/config.hpp"
#include "tempo/signal/recording.hpp"
#include "tempo/signal/windows.hpp"

namespace tempo::cli {

inline constexpr const char* kCommands[] = {"ingest", "pretrain", "train-supervised", "probe",
                                            "sweep",  "curve",    "embed",            "synth"};

/// Entry point behind the executable. Returns the process exit code:
/// 0 on success, 1 on a runtime failure, 2 on a usage error.
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Raw recordings named by the dataset spec (generated or read from EDF files),
/// with their recording ids.
std::vector<std::pair<std::string, signal::Recording>> load_recordings(const ExperimentConfig& cfg);

/// Preprocessed, windowed recordings of every subject.
signal::WindowDataset ingest(const ExperimentConfig& cfg);

/// The run's window cache, created first when absent.
signal::WindowDataset load_or_ingest(const ExperimentConfig& cfg);

}  // namespace tempo::cli
