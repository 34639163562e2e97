#include "tempo/signal/window_cache.hpp"

#include <fstream>

#include <json.hpp>

#include "tempo/common/binary_io.hpp"

namespace tempo::signal {

namespace {
constexpr char kMagic[4] = {'T', 'C', 'W', 'D'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_window_cache(const WindowDataset& ds, const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["channels"] = ds.channels;
  meta["window_samples"] = ds.window_samples;
  meta["rate_hz"] = ds.rate_hz;
  meta["channel_names"] = ds.channel_names;
  auto& recs = meta["recordings"] = nlohmann::json::array();
  for (const auto& r : ds.recordings) {
    nlohmann::json j{{"id", r.id}, {"subject", r.subject_id}};
    j["age"] = r.age_years ? nlohmann::json(*r.age_years) : nlohmann::json(nullptr);
    recs.push_back(std::move(j));
  }
  auto& wins = meta["windows"] = nlohmann::json::array();
  for (const auto& w : ds.windows) {
    wins.push_back({w.start_sample, w.recording, w.stage ? std::string(stage_name(*w.stage)) : std::string(),
                    w.degenerate});
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write window cache '" + path.string() + "'");
  out.write(kMagic, 4);
  binary::write_le<std::uint32_t>(out, kVersion);
  binary::write_string(out, meta.dump());
  binary::write_le<std::uint64_t>(out, ds.windows.size());
  for (const auto& w : ds.windows) {
    out.write(reinterpret_cast<const char*>(w.data.data()), static_cast<std::streamsize>(w.data.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

WindowDataset load_window_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open window cache '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("'" + path.string() + "' is not a window cache (bad magic)");
  }
  const auto version = binary::read_le<std::uint32_t>(in, "version");
  if (version != kVersion) throw IoError("window cache version " + std::to_string(version) + " is not supported");
  const auto meta = nlohmann::json::parse(binary::read_string(in, "metadata"));
  WindowDataset ds;
  ds.channels = meta.at("channels").get<std::size_t>();
  ds.window_samples = meta.at("window_samples").get<std::size_t>();
  ds.rate_hz = meta.at("rate_hz").get<double>();
  ds.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
  for (const auto& r : meta.at("recordings")) {
    RecordingInfo info{r.at("id").get<std::string>(), r.at("subject").get<std::string>(), std::nullopt};
    if (!r.at("age").is_null()) info.age_years = r.at("age").get<double>();
    ds.recordings.push_back(std::move(info));
  }
  const auto count = binary::read_le<std::uint64_t>(in, "window count");
  const auto& wins = meta.at("windows");
  if (wins.size() != count) throw IoError("window cache metadata does not match window count");
  const std::size_t n = ds.channels * ds.window_samples;
  ds.windows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Window w;
    w.start_sample = wins[i][0].get<std::int64_t>();
    w.recording = wins[i][1].get<std::size_t>();
    const auto stage = wins[i][2].get<std::string>();
    if (!stage.empty()) w.stage = stage_from_name(stage);
    w.degenerate = wins[i][3].get<bool>();
    w.data.resize(n);
    in.read(reinterpret_cast<char*>(w.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float))) throw IoError("truncated window cache");
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

}  // namespace tempo::signal
