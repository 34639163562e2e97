#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace tempo::signal {

enum class SleepStage : unsigned char { W = 0, N1 = 1, N2 = 2, N3 = 3, R = 4 };

inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<SleepStage, kStageCount> kAllStages{SleepStage::W, SleepStage::N1, SleepStage::N2,
                                                                 SleepStage::N3, SleepStage::R};

/// Scoring convention of the raw labels: Rechtschaffen & Kales (stages 1-4)
/// or AASM (N1-N3).
enum class LabelScheme { RK, AASM };

std::string_view stage_name(SleepStage stage);
std::optional<SleepStage> stage_from_name(std::string_view name);
constexpr std::size_t stage_index(SleepStage s) { return static_cast<std::size_t>(s); }
SleepStage stage_at(std::size_t index);

std::optional<LabelScheme> scheme_from_name(std::string_view name);

/// Maps a raw hypnogram label onto the five AASM stages. Under RK stages 3 and
/// 4 merge into N3. Movement, unscored and unknown labels map to nothing.
/// Canonical stage names map to themselves under both schemes.
std::optional<SleepStage> map_stage(std::string_view raw_label, LabelScheme scheme);

}  // namespace tempo::signal
