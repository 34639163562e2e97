#include "tempo/signal/stages.hpp"

#include <algorithm>
#include <cctype>

#include "tempo/common/error.hpp"

namespace tempo::signal {

namespace {

std::string normalize(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  constexpr std::string_view prefix = "SLEEP STAGE";
  if (s.rfind(prefix, 0) == 0) {
    s.erase(0, prefix.size());
    const auto p = s.find_first_not_of(' ');
    s = p == std::string::npos ? std::string{} : s.substr(p);
  }
  return s;
}

}  // namespace

std::string_view stage_name(SleepStage stage) {
  switch (stage) {
    case SleepStage::W: return "W";
    case SleepStage::N1: return "N1";
    case SleepStage::N2: return "N2";
    case SleepStage::N3: return "N3";
    case SleepStage::R: return "R";
  }
  return "?";
}

std::optional<SleepStage> stage_from_name(std::string_view name) {
  for (auto s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

SleepStage stage_at(std::size_t index) {
  if (index >= kStageCount) throw ConfigError("stage index " + std::to_string(index) + " out of range");
  return kAllStages[index];
}

std::optional<LabelScheme> scheme_from_name(std::string_view name) {
  if (name == "RK" || name == "rk") return LabelScheme::RK;
  if (name == "AASM" || name == "aasm") return LabelScheme::AASM;
  return std::nullopt;
}

std::optional<SleepStage> map_stage(std::string_view raw_label, LabelScheme scheme) {
  const std::string s = normalize(raw_label);
  if (s == "W" || s == "WAKE") return SleepStage::W;
  if (s == "R" || s == "REM") return SleepStage::R;
  if (s == "N1" || s == "1") return SleepStage::N1;
  if (s == "N2" || s == "2") return SleepStage::N2;
  if (s == "N3" || s == "3") return SleepStage::N3;
  if (s == "4" && scheme == LabelScheme::RK) return SleepStage::N3;
  return std::nullopt;
}

}  // namespace tempo::signal
