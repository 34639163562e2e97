#include "tempo/eval/embedding.hpp"

#include <fstream>
#include <numeric>

#include "tempo/common/csv.hpp"
#include "tempo/common/error.hpp"

namespace tempo::eval {

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::size_t> idx) const {
  EmbeddingMatrix out;
  out.rows = idx.size();
  out.cols = cols;
  out.values.reserve(idx.size() * cols);
  for (auto i : idx) {
    if (i >= rows) throw ShapeError("row " + std::to_string(i) + " out of range");
    const auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.info.push_back(info[i]);
  }
  return out;
}

std::vector<RowInfo> row_info(const signal::WindowDataset& ds) {
  std::vector<RowInfo> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& w = ds.windows[i];
    const auto& rec = ds.recordings.at(w.recording);
    out.push_back({rec.id, ds.start_seconds(i), w.stage, rec.age_years});
  }
  return out;
}

EmbeddingMatrix embed_dataset(const models::ModelBundle<float>& bundle, const signal::WindowDataset& ds) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto h = models::embed_windows(bundle.extractor, bundle.config, ds, all);
  EmbeddingMatrix m;
  m.rows = ds.size();
  m.cols = bundle.config.embed_dim;
  m.values.assign(h.values().begin(), h.values().end());
  m.info = row_info(ds);
  return m;
}

EmbeddingMatrix handcrafted_embedding(const signal::WindowDataset& ds) {
  auto f = features::compute_feature_matrix(ds);
  EmbeddingMatrix m;
  m.rows = f.rows;
  m.cols = f.cols;
  m.values = std::move(f.values);
  m.info = row_info(ds);
  return m;
}

void export_embeddings(const EmbeddingMatrix& m, std::ostream& out) {
  for (std::size_t j = 0; j < m.cols; ++j) out << 'e' << j << ',';
  out << "recording,start_s,stage,age\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (double v : m.row(i)) out << csv::format_real(v, 9) << ',';
    const auto& r = m.info[i];
    out << r.recording << ',' << csv::format_real(r.start_s) << ',';
    if (r.stage) out << signal::stage_name(*r.stage);
    out << ',';
    if (r.age_years) out << csv::format_real(*r.age_years);
    out << '\n';
  }
}

void export_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write embeddings to '" + path.string() + "'");
  export_embeddings(m, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace tempo::eval
