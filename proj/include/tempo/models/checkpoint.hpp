#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "tempo/common/error.hpp"
#include "tempo/models/networks.hpp"

namespace tempo::models {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public IoError {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, Malformed };
  CheckpointError(Kind kind, const std::string& detail) : IoError(detail), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct TrainingSummary {
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  std::optional<double> best_valid_loss;
};

struct Checkpoint {
  ModelBundle<float> bundle;
  std::optional<TrainingSummary> summary;
};

/// "TCKP", u32 version, length-prefixed JSON (task, extractor config, summary),
/// u32 tensor count, then per tensor: name, u32 rank, u64 dims, f32 values.
void write_checkpoint(std::ostream& out, const ModelBundle<float>& bundle,
                      const std::optional<TrainingSummary>& summary = std::nullopt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const ModelBundle<float>& bundle, const std::filesystem::path& path,
                     const std::optional<TrainingSummary>& summary = std::nullopt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tempo::models
