#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tempo/features/handcrafted.hpp"
#include "tempo/models/networks.hpp"
#include "tempo/signal/windows.hpp"

namespace tempo::eval {

struct RowInfo {
  std::string recording;
  double start_s = 0.0;
  std::optional<signal::SleepStage> stage;
  std::optional<double> age_years;
};

/// N x D feature matrix with per-row provenance.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<RowInfo> info;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  /// Rows in the given order (copying their metadata).
  EmbeddingMatrix select(std::span<const std::size_t> rows) const;
};

std::vector<RowInfo> row_info(const signal::WindowDataset& ds);

/// Eval-mode extractor output for every window.
EmbeddingMatrix embed_dataset(const models::ModelBundle<float>& bundle, const signal::WindowDataset& ds);

/// Handcrafted feature bank of every window as an embedding.
EmbeddingMatrix handcrafted_embedding(const signal::WindowDataset& ds);

/// D columns e0..e{D-1} (9 significant digits) then recording,start_s,stage,age.
void export_embeddings(const EmbeddingMatrix& m, std::ostream& out);
void export_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

}  // namespace tempo::eval
