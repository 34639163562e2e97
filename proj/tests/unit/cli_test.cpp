#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tempo/cli/commands.hpp"
#include "tempo/cli/config.hpp"
#include "tempo/common/error.hpp"
#include "tempo/common/log.hpp"

using namespace tempo;
using namespace tempo::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "dataset": {"kind": "synthetic",
              "synthetic": {"subjects": [{"id": "a", "seed": 1}, {"id": "b", "seed": 2}, {"id": "c", "seed": 3}]}},
  "splits": {"train": ["a"], "valid": ["b"], "test": ["c"]}
})";

// Tiny end-to-end run: 20 minutes per subject, 5-s windows at 40 Hz.
std::string tiny_config(const fs::path& out_dir) {
  return R"({
  "run_name": "tiny",
  "output_dir": ")" + out_dir.string() + R"(",
  "seed": 5,
  "window_s": 5,
  "dataset": {"kind": "synthetic", "synthetic": {
    "n_states": 4, "rate_hz": 40, "channels": 2, "block_s": 5, "dwell_s": 20,
    "state_spectra": [[{"center_hz": 2, "bandwidth_hz": 1, "amplitude": 1}],
                      [{"center_hz": 6, "bandwidth_hz": 1, "amplitude": 1}],
                      [{"center_hz": 10, "bandwidth_hz": 1, "amplitude": 1}],
                      [{"center_hz": 14, "bandwidth_hz": 1, "amplitude": 1}]],
    "subjects": [{"id": "s1", "seed": 1, "hours": 0.34, "age": 30},
                 {"id": "s2", "seed": 2, "hours": 0.34, "age": 60},
                 {"id": "s3", "seed": 3, "hours": 0.34, "age": 45}]}},
  "preprocess": {"cutoff_hz": 18},
  "sampler": {"tau_pos_s": 10, "tau_neg_s": 60, "n_anchors": 40},
  "model": {"kernel": 9, "pool": 4, "embed_dim": 16},
  "train": {"batch_size": 64, "max_epochs": 2, "patience_epochs": 2},
  "probe": {"max_epochs": 10, "patience_epochs": 5, "lr": 0.01},
  "splits": {"train": ["s1"], "valid": ["s2"], "test": ["s3"]},
  "experiments": {"methods": ["rp", "rand", "handcrafted"], "budgets": [1, "ALL"], "n_seeds": 2,
                  "tau_pairs": [[10, 10], [10, 60]]}
})";
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("minimal config takes defaults") {
    const auto cfg = parse_config_text(kMinimal);
    CHECK(cfg.sampler.tau_pos_s == 240);
    CHECK(cfg.sampler.tau_neg_s == 900);
    CHECK(cfg.sampler.n_anchors_per_recording == 2000);
    CHECK(cfg.train.batch_size == 256);
    CHECK(cfg.train.lr == 1e-3);
    CHECK(cfg.model.embed_dim == 100);
    CHECK(cfg.experiments.n_seeds == 3);
    CHECK(cfg.experiments.budgets.size() == 5);
    CHECK(cfg.window_s == 30);
    CHECK(cfg.checkpoint("rp") == fs::path("runs") / "run" / "checkpoints" / "rp.tckp");
  }

  TEST_CASE("missing required keys and overlapping splits") {
    CHECK_THROWS_AS(parse_config_text(R"({"splits": {"train": ["a"], "valid": ["b"], "test": ["c"]}})"), ConfigError);
    std::string text = kMinimal;
    text.replace(text.find(R"("test": ["c"])"), 13, R"("test": ["a"])");
    try {
      parse_config_text(text);
      FAIL("expected a disjointness error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }
  }

  TEST_CASE("unknown keys warn with the nearest known key") {
    std::vector<std::string> seen;
    auto previous = set_log_sink([&](LogLevel, std::string_view m) { seen.emplace_back(m); });
    std::string text = kMinimal;
    text.insert(text.rfind('}'), R"(, "sampler": {"tau_poss": 100})");
    const auto cfg = parse_config_text(text);
    set_log_sink(previous);
    CHECK(cfg.sampler.tau_pos_s == 240);
    bool found = false;
    for (const auto& m : seen) found = found || (m.find("tau_poss") != std::string::npos && m.find("tau_pos_s") != std::string::npos);
    CHECK(found);
    CHECK(nearest_key("lrr", {"lr", "batch_size", "beta1"}) == "lr");
  }

  TEST_CASE("usage errors") {
    std::string err;
    CHECK(run({"frobnicate"}, &err) == 2);
    CHECK(err.find("pretrain") != std::string::npos);
    CHECK(run({}, &err) == 2);
    CHECK(run({"pretrain"}, &err) == 2);
  }

  TEST_CASE("commands produce their artifacts and rerun identically") {
    TempDir dir("tempo_cli_test");
    const auto cfg_path = dir.path / "tiny.json";
    std::ofstream(cfg_path) << tiny_config(dir.path / "runs");
    const auto run_dir = dir.path / "runs" / "tiny";
    const std::string c = cfg_path.string();

    std::string err;
    CHECK(run({"probe", "-c", c, "--features", "rp"}, &err) == 1);
    CHECK(err.find((run_dir / "checkpoints" / "rp.tckp").string()) != std::string::npos);

    INFO(err);
    REQUIRE(run({"pretrain", "-c", c, "--task", "rp"}, &err) == 0);
    CHECK(fs::exists(run_dir / "checkpoints" / "rp.tckp"));
    CHECK(fs::exists(run_dir / "history_rp.csv"));
    CHECK(fs::exists(run_dir / "windows.tcwd"));
    const auto history = slurp(run_dir / "history_rp.csv");
    const auto ckpt = slurp(run_dir / "checkpoints" / "rp.tckp");

    REQUIRE(run({"pretrain", "-c", c, "--task", "rp"}, &err) == 0);
    CHECK(slurp(run_dir / "history_rp.csv") == history);
    CHECK(slurp(run_dir / "checkpoints" / "rp.tckp") == ckpt);

    REQUIRE(run({"probe", "-c", c, "--features", "rp", "--n-per-class", "1"}, &err) == 0);
    CHECK(slurp(run_dir / "probe_rp.csv").rfind("features,n_per_class,seed,balanced_accuracy\n", 0) == 0);

    REQUIRE(run({"curve", "-c", c}, &err) == 0);
    std::istringstream curve(slurp(run_dir / "curve.csv"));
    std::string line;
    std::size_t rows = 0;
    std::getline(curve, line);
    while (std::getline(curve, line)) ++rows;
    CHECK(rows == 3 * 2 * 2);

    REQUIRE(run({"embed", "-c", c, "--features", "handcrafted"}, &err) == 0);
    CHECK(fs::exists(run_dir / "embeddings_handcrafted.csv"));

    REQUIRE(run({"pretrain", "-c", c, "--task", "ts", "--set", "train.max_epochs=1", "--set", "train.patience_epochs=1"}, &err) == 0);
    CHECK(fs::exists(run_dir / "history_ts.csv"));

    REQUIRE(run({"synth", "-c", c, "--dir", (dir.path / "edf").string()}, &err) == 0);
    CHECK(fs::exists(dir.path / "edf" / "s1.edf"));
  }
}
