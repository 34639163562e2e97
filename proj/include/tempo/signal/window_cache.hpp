#pragma once

#include <filesystem>

#include "tempo/signal/windows.hpp"

namespace tempo::signal {

/// Binary window cache: "TCWD", u32 version, u32 length + JSON metadata
/// block, u64 window count, then C*T little-endian float32 values per window.
void save_window_cache(const WindowDataset& ds, const std::filesystem::path& path);
WindowDataset load_window_cache(const std::filesystem::path& path);

}  // namespace tempo::signal
