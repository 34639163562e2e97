#include "tempo/models/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tempo/common/binary_io.hpp"

namespace tempo::models {

namespace {

constexpr char kMagic[4] = {'T', 'C', 'K', 'P'};

bool is_extractor_tensor(const std::string& name) {
  for (const char* prefix : {"spatial.", "conv1.", "conv2.", "fc."}) {
    if (name.starts_with(prefix)) return true;
  }
  return false;
}

void write_tensor(std::ostream& out, const NamedTensor<float>& e) {
  binary::write_string(out, e.name);
  const auto& shape = e.tensor.shape();
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) binary::write_le<std::uint64_t>(out, d);
  const auto v = e.tensor.values();
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelBundle<float>& bundle,
                      const std::optional<TrainingSummary>& summary) {
  const auto& c = bundle.config;
  nlohmann::json meta;
  meta["task"] = std::string(task_name(bundle.task));
  meta["extractor"] = {{"channels", c.channels},   {"window_samples", c.window_samples},
                       {"kernel", c.kernel},       {"pool", c.pool},
                       {"embed_dim", c.embed_dim}, {"dropout", c.dropout}};
  if (summary) {
    nlohmann::json s{{"best_epoch", summary->best_epoch}, {"stopped_epoch", summary->stopped_epoch}};
    s["best_valid_loss"] = summary->best_valid_loss && std::isfinite(*summary->best_valid_loss)
                               ? nlohmann::json(*summary->best_valid_loss)
                               : nlohmann::json(nullptr);
    meta["history"] = std::move(s);
  }

  out.write(kMagic, 4);
  binary::write_le<std::uint32_t>(out, kCheckpointVersion);
  binary::write_string(out, meta.dump());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.extractor.size() + bundle.head.size()));
  for (const auto& e : bundle.extractor.entries()) write_tensor(out, e);
  for (const auto& e : bundle.head.entries()) write_tensor(out, e);
  if (!out) throw IoError("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  using Kind = CheckpointError::Kind;
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(Kind::BadMagic, "not a checkpoint: bad magic bytes");
  }
  Checkpoint ck;
  try {
    const auto version = binary::read_le<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
      throw CheckpointError(Kind::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                       " is not supported (expected " +
                                                       std::to_string(kCheckpointVersion) + ")");
    }
    const std::string text = binary::read_string(in, "config block");
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(Kind::Malformed, std::string("checkpoint config block: ") + e.what());
    }
    ExtractorConfig cfg;
    ModelTask task;
    try {
      task = task_from_name(meta.at("task").get<std::string>());
      const auto& x = meta.at("extractor");
      cfg.channels = x.at("channels").get<std::size_t>();
      cfg.window_samples = x.at("window_samples").get<std::size_t>();
      cfg.kernel = x.at("kernel").get<std::size_t>();
      cfg.pool = x.at("pool").get<std::size_t>();
      cfg.embed_dim = x.at("embed_dim").get<std::size_t>();
      cfg.dropout = x.at("dropout").get<double>();
      if (meta.contains("history")) {
        const auto& h = meta["history"];
        TrainingSummary s;
        s.best_epoch = h.at("best_epoch").get<std::size_t>();
        s.stopped_epoch = h.at("stopped_epoch").get<std::size_t>();
        if (!h.at("best_valid_loss").is_null()) s.best_valid_loss = h["best_valid_loss"].get<double>();
        ck.summary = s;
      }
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(Kind::Malformed, std::string("checkpoint config block: ") + e.what());
    }
    cfg.validate();
    ck.bundle.task = task;
    ck.bundle.config = cfg;

    const auto count = binary::read_le<std::uint32_t>(in, "tensor count");
    for (std::uint32_t i = 0; i < count; ++i) {
      auto name = binary::read_string(in, "tensor name");
      const auto rank = binary::read_le<std::uint32_t>(in, "tensor rank");
      if (rank > 8) throw CheckpointError(Kind::Malformed, "tensor '" + name + "' has implausible rank");
      nn::Shape shape(rank);
      for (auto& d : shape) d = binary::read_le<std::uint64_t>(in, "tensor dims");
      nn::Tensor<float> t(shape, true);
      auto v = t.values();
      in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
      if (in.gcount() != static_cast<std::streamsize>(v.size_bytes())) {
        throw CheckpointError(Kind::Truncated, "truncated checkpoint in tensor '" + name + "'");
      }
      auto& set = is_extractor_tensor(name) ? ck.bundle.extractor : ck.bundle.head;
      set.insert(std::move(name), std::move(t));
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const IoError& e) {
    throw CheckpointError(Kind::Truncated, e.what());
  }

  // The stored layout must be the one this task/config builds.
  const auto reference = make_bundle<float>(ck.bundle.task, ck.bundle.config, 0);
  auto check = [](const ParameterSet<float>& got, const ParameterSet<float>& want, const char* part) {
    if (got.size() != want.size()) {
      throw CheckpointError(Kind::Malformed, std::string("checkpoint ") + part + " has " +
                                                 std::to_string(got.size()) + " tensors, expected " +
                                                 std::to_string(want.size()));
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      const auto& g = got.entries()[i];
      const auto& w = want.entries()[i];
      if (g.name != w.name || g.tensor.shape() != w.tensor.shape()) {
        throw CheckpointError(Kind::Malformed, "checkpoint tensor " + g.name + " " + nn::shape_str(g.tensor.shape()) +
                                                   " does not match expected " + w.name + " " +
                                                   nn::shape_str(w.tensor.shape()));
      }
    }
  };
  check(ck.bundle.extractor, reference.extractor, "extractor");
  check(ck.bundle.head, reference.head, "head");
  return ck;
}

void save_checkpoint(const ModelBundle<float>& bundle, const std::filesystem::path& path,
                     const std::optional<TrainingSummary>& summary) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, bundle, summary);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  try {
    return read_checkpoint(in);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace tempo::models
