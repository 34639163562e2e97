#include "tempo/eval/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tempo/common/csv.hpp"
#include "tempo/common/error.hpp"
#include "tempo/common/log.hpp"
#include "tempo/common/random.hpp"
#include "tempo/eval/metrics.hpp"

namespace tempo::eval {

namespace {

void check_pair(std::span<const std::string> a, const char* an, std::span<const std::string> b, const char* bn) {
  const std::set<std::string> sa(a.begin(), a.end());
  for (const auto& s : b) {
    if (sa.contains(s)) {
      throw ConfigError("subject '" + s + "' appears in both the " + an + " and " + bn + " splits");
    }
  }
}

std::vector<std::size_t> present_labels_of(const EmbeddingMatrix& m) { return row_labels(m); }

}  // namespace

void check_disjoint(const SubjectSplits& splits) {
  check_pair(splits.train, "train", splits.valid, "valid");
  check_pair(splits.train, "train", splits.test, "test");
  check_pair(splits.valid, "valid", splits.test, "test");
}

void check_disjoint(const signal::WindowDataset& train, const signal::WindowDataset& valid,
                    const signal::WindowDataset& test) {
  check_disjoint(SubjectSplits{train.subjects(), valid.subjects(), test.subjects()});
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::RP: return "rp";
    case Method::TS: return "ts";
    case Method::AE: return "ae";
    case Method::RandInit: return "rand";
    case Method::Supervised: return "supervised";
    case Method::Handcrafted: return "handcrafted";
  }
  return "?";
}

Method method_from_name(std::string_view name) {
  std::string s(name);
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Method m : {Method::RP, Method::TS, Method::AE, Method::RandInit, Method::Supervised, Method::Handcrafted}) {
    if (s == method_name(m)) return m;
  }
  if (s == "rand-init" || s == "rand_init") return Method::RandInit;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected rp, ts, ae, rand, supervised or handcrafted)");
}

double probe_balanced_accuracy(const EmbeddingMatrix& train, const EmbeddingMatrix& valid,
                               const EmbeddingMatrix& test, const train::TrainConfig& cfg,
                               std::optional<std::size_t> n_per_class, std::uint64_t seed) {
  const auto all_labels = present_labels_of(train);
  const auto pick = subsample_per_class(all_labels, n_per_class, seed);
  const auto x = train.select(pick);
  const auto y = row_labels(x);
  const auto weights = train::compute_class_weights(y, models::kStageClasses);
  const auto vy = row_labels(valid);
  auto probe_cfg = cfg;
  probe_cfg.seed = seed;
  const auto probe = fit_linear_probe(x, y, weights, probe_cfg, &valid, vy);
  const auto pred = probe.predict(test);
  const auto truth = row_labels(test);
  return balanced_accuracy(std::span<const std::size_t>(pred), std::span<const std::size_t>(truth));
}

std::vector<CurveRow> run_lowdata_curve(std::span<const Method> methods,
                                        std::span<const std::optional<std::size_t>> budgets, std::size_t n_seeds,
                                        const CurveInputs& in, std::uint64_t base_seed) {
  if (!in.train || !in.valid || !in.test) throw ConfigError("curve needs train, valid and test windows");
  check_disjoint(*in.train, *in.valid, *in.test);
  std::vector<CurveRow> rows;
  for (Method method : methods) {
    const std::string name(method_name(method));
    std::optional<EmbeddingMatrix> tr, va, te;
    if (method == Method::Handcrafted) {
      tr = handcrafted_embedding(*in.train);
      va = handcrafted_embedding(*in.valid);
      te = handcrafted_embedding(*in.test);
    } else if (method != Method::Supervised) {
      const auto it = in.bundles.find(method);
      if (it == in.bundles.end() || it->second == nullptr) {
        throw ConfigError("no trained model available for method '" + name + "'");
      }
      tr = embed_dataset(*it->second, *in.train);
      va = embed_dataset(*it->second, *in.valid);
      te = embed_dataset(*it->second, *in.test);
    }
    for (const auto& budget : budgets) {
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const std::uint64_t seed = mix_seed(base_seed, s);
        double acc = 0.0;
        if (method == Method::Supervised) {
          const auto labels = train::stage_labels(*in.train);
          const auto pick = subsample_per_class(labels, budget, seed);
          const auto subset = in.train->subset(pick);
          auto cfg = in.supervised;
          cfg.seed = seed;
          const auto fit = train::fit_supervised(subset, *in.valid, in.model, cfg);
          const auto h = embed_dataset(fit.bundle, *in.test);
          nn::Tape<float> tape(false);
          nn::Tensor<float> ht({h.rows, h.cols}, std::vector<float>(h.values.begin(), h.values.end()));
          const auto logits = models::supervised_logits(tape, fit.bundle.head, ht);
          std::vector<std::size_t> pred(h.rows);
          const auto z = logits.values();
          for (std::size_t i = 0; i < h.rows; ++i) {
            const auto first = z.begin() + static_cast<std::ptrdiff_t>(i * models::kStageClasses);
            pred[i] = static_cast<std::size_t>(
                std::max_element(first, first + static_cast<std::ptrdiff_t>(models::kStageClasses)) - first);
          }
          const auto truth = train::stage_labels(*in.test);
          acc = balanced_accuracy(std::span<const std::size_t>(pred), std::span<const std::size_t>(truth));
        } else {
          acc = probe_balanced_accuracy(*tr, *va, *te, in.probe, budget, seed);
        }
        rows.push_back({name, budget, seed, acc});
        log_info("curve {} n={} seed={}: balanced accuracy {:.4f}", name,
                 budget ? std::to_string(*budget) : std::string("ALL"), seed, acc);
      }
    }
  }
  return rows;
}

void write_curve_csv(std::span<const CurveRow> rows, std::ostream& out) {
  out << "method,n_per_class,seed,balanced_accuracy\n";
  for (const auto& r : rows) {
    out << r.method << ',' << (r.n_per_class ? std::to_string(*r.n_per_class) : std::string("ALL")) << ',' << r.seed
        << ',' << csv::format_real(r.balanced_accuracy) << '\n';
  }
}

signal::WindowDataset labeled_subset(const signal::WindowDataset& ds) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.windows[i].stage) idx.push_back(i);
  }
  return ds.subset(idx);
}

ssl::PretextDataset sample_pretext(const signal::WindowDataset& ds, ssl::PretextTask task,
                                   const ssl::SamplerConfig& cfg) {
  return task == ssl::PretextTask::RP ? ssl::sample_rp_dataset(ds, cfg) : ssl::sample_ts_dataset(ds, cfg);
}

double pretext_balanced_accuracy(const models::ModelBundle<float>& bundle, const signal::WindowDataset& windows,
                                 const ssl::PretextDataset& data) {
  if (data.empty()) throw ConfigError("no pretext tuples to evaluate");
  const auto scores = train::pretext_scores(bundle, windows, data);
  std::vector<int> pred(scores.size()), truth(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    pred[i] = models::predict_label(scores[i]);
    truth[i] = data.label(i);
  }
  return balanced_accuracy(std::span<const int>(pred), std::span<const int>(truth));
}

SweepResult run_tau_sweep(std::span<const std::pair<double, double>> tau_pairs, ssl::PretextTask task,
                          const SweepInputs& in) {
  if (!in.train || !in.valid || !in.test) throw ConfigError("sweep needs train, valid and test windows");
  check_disjoint(*in.train, *in.valid, *in.test);
  const auto train_labeled = labeled_subset(*in.train);
  const auto valid_labeled = labeled_subset(*in.valid);
  const auto test_labeled = labeled_subset(*in.test);
  SweepResult result;
  for (const auto& [tau_pos, tau_neg] : tau_pairs) {
    auto sampler = in.sampler;
    sampler.tau_pos_s = tau_pos;
    sampler.tau_neg_s = tau_neg;
    auto per_split = [&](std::uint64_t stream) {
      auto c = sampler;
      c.seed = mix_seed(in.sampler.seed, stream);
      return c;
    };
    const auto tr = sample_pretext(*in.train, task, per_split(0));
    const auto va = sample_pretext(*in.valid, task, per_split(1));
    const auto te = sample_pretext(*in.test, task, per_split(2));
    auto fit = train::fit_pretext(*in.train, tr, *in.valid, va, in.model, in.pretext);
    SweepRow row{tau_pos, tau_neg, 0.0, 0.0};
    row.bal_acc_ssl = pretext_balanced_accuracy(fit.bundle, *in.test, te);
    row.bal_acc_staging = probe_balanced_accuracy(embed_dataset(fit.bundle, train_labeled),
                                                  embed_dataset(fit.bundle, valid_labeled),
                                                  embed_dataset(fit.bundle, test_labeled), in.probe);
    log_info("sweep tau_pos={} s tau_neg={} s: pretext {:.4f}, staging {:.4f} (best epoch {})", tau_pos, tau_neg,
             row.bal_acc_ssl, row.bal_acc_staging, fit.history.best_epoch);
    result.rows.push_back(row);
    result.bundles.push_back(std::move(fit.bundle));
    result.histories.push_back(std::move(fit.history));
  }
  return result;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << "tau_pos_s,tau_neg_s,bal_acc_ssl,bal_acc_staging\n";
  for (const auto& r : rows) {
    out << csv::format_real(r.tau_pos_s) << ',' << csv::format_real(r.tau_neg_s) << ','
        << csv::format_real(r.bal_acc_ssl) << ',' << csv::format_real(r.bal_acc_staging) << '\n';
  }
}

}  // namespace tempo::eval
