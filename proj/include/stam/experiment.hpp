#pragma once

// Experiment driver: builds streams, feeds the hierarchy, evaluates at phase
// boundaries (classification over classes seen so far, embedding clustering),
// and writes metrics/summary/trace CSVs. Ablations and sweeps are thin
// wrappers that patch the config and redirect the output directory.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stam/associations.hpp"
#include "stam/classify.hpp"
#include "stam/config.hpp"
#include "stam/embedding.hpp"
#include "stam/errors.hpp"
#include "stam/hierarchy.hpp"
#include "stam/idx.hpp"
#include "stam/kmeans.hpp"
#include "stam/knn.hpp"
#include "stam/metrics.hpp"
#include "stam/pca.hpp"
#include "stam/plot.hpp"
#include "stam/snapshot.hpp"
#include "stam/stream.hpp"

namespace stam {

struct PcaPhaseMetrics {
  int stream_id = 0;
  int eval_id = 0;
  int phase = 0;
  int m_components = 0;
  double acc_mean = 0.0;
  double cluster_acc = 0.0;
};

struct ExperimentResult {
  std::size_t num_layers = 0;
  std::vector<PhaseMetrics> rows;
  std::vector<std::vector<LtmTracePoint>> traces;  // per stream
  std::vector<PcaPhaseMetrics> pca_rows;
};

namespace experiment_detail {

inline double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

inline std::vector<double> flatten(const Image& im) { return im.pixels; }

struct EvalSets {
  LabeledSet labeled, test;
};

// Eval repeat e draws with seed master+e (fresh labeled/test sets per
// repeat, stable across phases since per-class permutations only grow).
inline EvalSets draw_eval_sets(const std::vector<Image>& train,
                               const std::vector<Image>& test,
                               const std::vector<int>& classes,
                               const ExperimentConfig& cfg, int eval_id) {
  const std::uint64_t seed = cfg.master_seed + static_cast<std::uint64_t>(eval_id);
  EvalSets s;
  s.labeled = sample_labeled_set(train, classes, cfg.labels_per_class, seed);
  s.test = sample_test_set(test, classes, cfg.test_per_class, seed);
  return s;
}

inline std::vector<std::uint64_t> ltm_counts(const Hierarchy& h) {
  std::vector<std::uint64_t> out;
  for (std::size_t l = 0; l < h.num_layers(); ++l)
    out.push_back(h.layer_active(l) ? h.layer(l).ltm().size() : 0);
  return out;
}

inline std::size_t eval_pool_total(const Hierarchy& h) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < h.num_layers(); ++l) {
    if (!h.layer_active(l)) continue;
    total += h.eval_tier() == SearchTier::stm_only ? h.layer(l).stm().size()
                                                   : h.layer(l).ltm().size();
  }
  return total;
}

// Full evaluation of the frozen hierarchy on one labeled/test draw.
inline PhaseMetrics evaluate(const Hierarchy& h, const EvalSets& sets,
                             const ExperimentConfig& cfg, int stream_id,
                             int eval_id, int phase,
                             std::vector<EmbeddingVector>* embs_out = nullptr) {
  PhaseMetrics m;
  m.stream_id = stream_id;
  m.eval_id = eval_id;
  m.phase = phase;
  m.classes_seen = sets.labeled.classes;
  m.ltm_counts = ltm_counts(h);
  m.cin_fractions.assign(h.num_layers(), 0.0);
  m.footprint_px = h.memory_footprint();

  if (eval_pool_total(h) == 0) {
    // Nothing consolidated (e.g. theta = inf): the classifier cannot run.
    // Record a degenerate row instead of failing the whole experiment.
    m.acc_per_class.assign(m.classes_seen.size(), 0.0);
    m.abstain_rate = 1.0;
    return m;
  }

  const Associations assoc = compute_associations(h, sets.labeled, cfg.gamma);
  for (std::size_t l = 0; l < h.num_layers(); ++l)
    m.cin_fractions[l] =
        assoc.per_layer[l].empty() ? 0.0 : assoc.cin_fraction(l);

  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // hit, total
  for (int c : m.classes_seen) per_class[c] = {0, 0};
  std::size_t correct = 0, abstained = 0;
  for (const Image& im : sets.test.examples) {
    const ClassifyResult r = classify(h, assoc, im);
    auto& [hit, total] = per_class.at(im.label);
    ++total;
    if (r.abstained) {
      ++abstained;  // abstentions count as misclassifications
    } else if (r.class_id == im.label) {
      ++hit;
      ++correct;
    }
  }
  const std::size_t n_test = sets.test.examples.size();
  m.acc_mean = static_cast<double>(correct) / static_cast<double>(n_test);
  m.abstain_rate = static_cast<double>(abstained) / static_cast<double>(n_test);
  for (int c : m.classes_seen) {
    const auto& [hit, total] = per_class.at(c);
    m.acc_per_class.push_back(
        total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0);
  }

  // Unsupervised head: cluster the test embeddings, score by majority class.
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
  std::vector<EmbeddingVector> embs;
  for (const Image& im : sets.test.examples) {
    EmbeddingVector e = embed(h, im);
    points.push_back(e.values);
    labels.push_back(im.label);
    if (embs_out) embs.push_back(std::move(e));
  }
  const int k = cfg.cluster_k_factor * static_cast<int>(m.classes_seen.size());
  const KmeansResult km =
      kmeans(points, k,
             derive_seed(cfg.master_seed + static_cast<std::uint64_t>(eval_id),
                         "eval-kmeans", static_cast<std::uint64_t>(stream_id),
                         static_cast<std::uint64_t>(phase)),
             cfg.kmeans_restarts);
  m.cluster_acc = cluster_accuracy(km.assignment, labels);
  if (embs_out) *embs_out = std::move(embs);
  return m;
}

}  // namespace experiment_detail

// One full experiment: `stream_repeats` independent streams, evaluation after
// every phase, all artifacts under cfg.out_dir. Identical configs (with
// fixed_clock) produce byte-identical metrics.csv.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  using namespace experiment_detail;
  cfg.validate();
  const std::vector<LayerConfig> layer_cfgs = cfg.layer_configs();

  const std::vector<Image> train =
      load_idx_dataset(cfg.train_images, cfg.train_labels);
  const std::vector<Image> test =
      load_idx_dataset(cfg.test_images, cfg.test_labels);
  if (train.empty() || test.empty())
    throw data_error("experiment: empty dataset");

  fs::create_directories(cfg.out_dir);
  ExperimentResult res;
  res.num_layers = layer_cfgs.size();
  res.traces.resize(cfg.stream_repeats);

  for (int s = 0; s < cfg.stream_repeats; ++s) {
    const StreamSpec spec =
        cfg.stream_spec(derive_seed(cfg.master_seed, "stream", s));
    const std::vector<Image> stream = build_stream(train, spec);

    AblationFlags flags;
    flags.ltm_disabled = cfg.ltm_disabled;
    flags.ltm_dynamic = cfg.ltm_dynamic;
    flags.drop_layers = cfg.drop_layers;
    Hierarchy h(layer_cfgs, flags);

    const std::size_t prefix =
        cfg.init_images > 0 ? static_cast<std::size_t>(cfg.init_images)
                            : h.init_prefix_length(stream);
    if (prefix > stream.size())
      throw data_error("experiment: init_images exceeds stream length");
    h.init_from_images(std::span(stream.data(), prefix),
                       derive_seed(cfg.master_seed, "init", s));

    std::vector<std::vector<double>> pca_data;  // stream pixels seen so far

    std::size_t idx = 0;
    for (std::size_t p = 0; p < spec.phases.size(); ++p) {
      const auto t0 = std::chrono::steady_clock::now();
      for (int i = 0; i < spec.examples_per_phase; ++i, ++idx) {
        h.process_image(stream[idx]);
        if (cfg.pca_baseline) pca_data.push_back(flatten(stream[idx]));
        if (cfg.ltm_trace_every > 0 &&
            (h.images_processed() % cfg.ltm_trace_every == 0 ||
             i + 1 == spec.examples_per_phase))
          res.traces[s].push_back({h.images_processed(), ltm_counts(h)});
      }
      const double phase_seconds = elapsed_s(t0);
      const std::vector<int> classes = spec.classes_seen(p);

      for (int e = 0; e < cfg.eval_repeats; ++e) {
        const auto t1 = std::chrono::steady_clock::now();
        const EvalSets sets = draw_eval_sets(train, test, classes, cfg, e);
        const bool dump = cfg.dump_embeddings && e == 0 &&
                          p + 1 == spec.phases.size() &&
                          eval_pool_total(h) > 0;
        std::vector<EmbeddingVector> embs;
        PhaseMetrics row = evaluate(h, sets, cfg, s, e,
                                    static_cast<int>(p) + 1,
                                    dump ? &embs : nullptr);
        if (dump) {
          std::vector<int> ids, labels;
          for (std::size_t i = 0; i < sets.test.examples.size(); ++i) {
            ids.push_back(static_cast<int>(i));
            labels.push_back(sets.test.examples[i].label);
          }
          write_embeddings_csv(fs::path(cfg.out_dir) /
                                   ("embeddings_s" + std::to_string(s) + ".csv"),
                               ids, labels, embs);
        }
        row.seconds = cfg.fixed_clock
                          ? 0.0
                          : elapsed_s(t1) + (e == 0 ? phase_seconds : 0.0);
        res.rows.push_back(std::move(row));
      }

      if (cfg.pca_baseline) {
        const int m_override =
            p < cfg.pca_schedule.size() ? cfg.pca_schedule[p] : 0;
        const PcaModel model = pca_fit(pca_data, cfg.pca_m_cap,
                                       cfg.pca_variance_target, m_override);
        for (int e = 0; e < cfg.eval_repeats; ++e) {
          const EvalSets sets = draw_eval_sets(train, test, classes, cfg, e);
          std::vector<std::vector<double>> tr;
          std::vector<int> tr_labels;
          for (const Image& im : sets.labeled.examples) {
            tr.push_back(pca_transform(model, im.pixels));
            tr_labels.push_back(im.label);
          }
          std::size_t correct = 0;
          std::vector<std::vector<double>> te;
          std::vector<int> te_labels;
          for (const Image& im : sets.test.examples) {
            te.push_back(pca_transform(model, im.pixels));
            te_labels.push_back(im.label);
            if (knn_classify(tr, tr_labels, te.back(), cfg.pca_knn_k) ==
                im.label)
              ++correct;
          }
          PcaPhaseMetrics pm;
          pm.stream_id = s;
          pm.eval_id = e;
          pm.phase = static_cast<int>(p) + 1;
          pm.m_components = static_cast<int>(model.m);
          pm.acc_mean = static_cast<double>(correct) /
                        static_cast<double>(te.size());
          const int k =
              cfg.cluster_k_factor * static_cast<int>(classes.size());
          const KmeansResult km = kmeans(
              te, k,
              derive_seed(cfg.master_seed + static_cast<std::uint64_t>(e),
                          "pca-kmeans", static_cast<std::uint64_t>(s),
                          static_cast<std::uint64_t>(p)),
              cfg.kmeans_restarts);
          pm.cluster_acc = cluster_accuracy(km.assignment, te_labels);
          res.pca_rows.push_back(pm);
        }
        if (cfg.save_snapshots && p + 1 == spec.phases.size())
          save_pca(fs::path(cfg.out_dir) / ("pca_s" + std::to_string(s) + ".snap"),
                   model);
      }
    }

    if (cfg.save_snapshots)
      save_hierarchy(
          fs::path(cfg.out_dir) / ("snapshot_s" + std::to_string(s) + ".snap"),
          h);
    if (cfg.ltm_trace_every > 0)
      write_ltm_trace_csv(fs::path(cfg.out_dir) /
                              ("ltm_trace_s" + std::to_string(s) + ".csv"),
                          res.traces[s], res.num_layers);
  }

  write_metrics_csv(fs::path(cfg.out_dir) / "metrics.csv", res.rows,
                    res.num_layers);
  write_summary_csv(fs::path(cfg.out_dir) / "summary.csv", res.rows,
                    res.num_layers);
  if (cfg.pca_baseline) {
    std::ofstream out(fs::path(cfg.out_dir) / "pca_metrics.csv",
                      std::ios::trunc);
    if (!out) throw data_error("cannot write pca_metrics.csv");
    out << "stream_id,eval_id,phase,m_components,acc_mean,cluster_acc\n";
    for (const auto& pm : res.pca_rows)
      out << pm.stream_id << ',' << pm.eval_id << ',' << pm.phase << ','
          << pm.m_components << ',' << metrics_detail::fmt(pm.acc_mean) << ','
          << metrics_detail::fmt(pm.cluster_acc) << "\n";
  }
  if (cfg.plots) {
    // accuracy vs phase, one series per stream (mean over eval repeats)
    std::map<std::pair<int, int>, std::pair<double, int>> acc;  // (s,p) -> sum,n
    for (const auto& r : res.rows) {
      auto& [sum, n] = acc[{r.stream_id, r.phase}];
      sum += r.acc_mean;
      ++n;
    }
    std::vector<PlotSeries> series(cfg.stream_repeats);
    for (int s = 0; s < cfg.stream_repeats; ++s)
      series[s].name = "stream " + std::to_string(s);
    for (const auto& [key, val] : acc) {
      series[key.first].x.push_back(key.second);
      series[key.first].y.push_back(val.first / val.second);
    }
    write_line_plot_svg(fs::path(cfg.out_dir) / "accuracy_vs_phase.svg",
                        "Accuracy per phase", "phase", "accuracy", series);
    if (!res.traces.empty() && !res.traces[0].empty()) {
      std::vector<PlotSeries> growth(res.num_layers);
      for (std::size_t l = 0; l < res.num_layers; ++l) {
        growth[l].name = "layer " + std::to_string(l + 1);
        for (const auto& t : res.traces[0]) {
          growth[l].x.push_back(static_cast<double>(t.images));
          growth[l].y.push_back(static_cast<double>(t.per_layer[l]));
        }
      }
      write_line_plot_svg(fs::path(cfg.out_dir) / "ltm_growth.svg",
                          "LTM size (stream 0)", "images processed",
                          "LTM centroids", growth);
    }
  }
  return res;
}

enum class AblationKind { no_ltm, dynamic_ltm, drop_layers };

// Same experiment under one ablation; outputs land in a suffixed directory.
inline ExperimentResult run_ablation(ExperimentConfig cfg, AblationKind kind,
                                     std::vector<int> drop = {}) {
  namespace fs = std::filesystem;
  std::string suffix;
  switch (kind) {
    case AblationKind::no_ltm:
      cfg.ltm_disabled = true;
      cfg.ltm_dynamic = false;
      suffix = "ablation_no_ltm";
      break;
    case AblationKind::dynamic_ltm:
      cfg.ltm_dynamic = true;
      cfg.ltm_disabled = false;
      suffix = "ablation_dynamic_ltm";
      break;
    case AblationKind::drop_layers: {
      if (drop.empty())
        throw config_error("ablation: drop_layers needs layer ids");
      cfg.drop_layers = drop;
      suffix = "ablation_drop";
      for (int id : drop) suffix += "_l" + std::to_string(id);
      break;
    }
  }
  cfg.out_dir = (fs::path(cfg.out_dir) / suffix).string();
  return run_experiment(cfg);
}

namespace experiment_detail {

inline void apply_sweep_value(ExperimentConfig& cfg, const std::string& axis,
                              double value) {
  if (axis == "alpha") cfg.alpha = {value};
  else if (axis == "beta") cfg.beta = {value};
  else if (axis == "gamma") cfg.gamma = value;
  else if (axis == "theta") cfg.theta = {value};
  else if (axis == "delta") cfg.delta = {static_cast<int>(value)};
  else if (axis == "labels_per_class") cfg.labels_per_class = static_cast<int>(value);
  else if (axis == "stream_length") cfg.examples_per_phase = static_cast<int>(value);
  else throw config_error("sweep: unknown axis '" + axis + "'");
}

inline std::string value_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace experiment_detail

// Independent experiments per value (same master seed), one subdirectory
// each, plus a merged per-(value, phase) summary CSV.
inline std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base,
                                               const std::string& axis,
                                               const std::vector<double>& values) {
  namespace fs = std::filesystem;
  using namespace experiment_detail;
  if (values.empty()) throw config_error("sweep: no values for axis " + axis);
  std::vector<ExperimentResult> results;
  std::vector<std::pair<double, const ExperimentResult*>> merged;
  for (double v : values) {
    ExperimentConfig cfg = base;
    apply_sweep_value(cfg, axis, v);
    cfg.out_dir =
        (fs::path(base.out_dir) / ("sweep_" + axis + "_" + value_tag(v)))
            .string();
    results.push_back(run_experiment(cfg));
  }
  fs::create_directories(base.out_dir);
  std::ofstream out(fs::path(base.out_dir) / ("sweep_" + axis + ".csv"),
                    std::ios::trunc);
  if (!out) throw data_error("cannot write sweep csv");
  out << "value,phase,acc_mean,acc_std,cluster_mean,ltm_total_mean,"
         "footprint_mean\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::map<int, std::vector<const PhaseMetrics*>> by_phase;
    for (const auto& r : results[i].rows) by_phase[r.phase].push_back(&r);
    for (const auto& [phase, group] : by_phase) {
      std::vector<double> acc, clu;
      double ltm = 0.0, foot = 0.0;
      for (const auto* m : group) {
        acc.push_back(m->acc_mean);
        clu.push_back(m->cluster_acc);
        double t = 0.0;
        for (std::uint64_t c : m->ltm_counts) t += static_cast<double>(c);
        ltm += t;
        foot += static_cast<double>(m->footprint_px);
      }
      const auto a = metrics_detail::mean_std(acc);
      const auto c = metrics_detail::mean_std(clu);
      const double n = static_cast<double>(group.size());
      out << experiment_detail::value_tag(values[i]) << ',' << phase << ','
          << metrics_detail::fmt(a.mean) << ',' << metrics_detail::fmt(a.std)
          << ',' << metrics_detail::fmt(c.mean) << ','
          << metrics_detail::fmt(ltm / n, "%.2f") << ','
          << metrics_detail::fmt(foot / n, "%.1f") << "\n";
    }
  }
  return results;
}

// Rebuild summary.csv (and optional plots) from an existing metrics.csv.
inline void emit_report(const std::filesystem::path& out_dir, bool plots) {
  namespace fs = std::filesystem;
  std::size_t num_layers = 0;
  const std::vector<PhaseMetrics> rows =
      parse_metrics_csv(fs::path(out_dir) / "metrics.csv", &num_layers);
  if (rows.empty()) throw eval_error("report: metrics.csv has no rows");
  write_summary_csv(fs::path(out_dir) / "summary.csv", rows, num_layers);
  if (plots) {
    std::map<std::pair<int, int>, std::pair<double, int>> acc;
    int max_stream = 0;
    for (const auto& r : rows) {
      auto& [sum, n] = acc[{r.stream_id, r.phase}];
      sum += r.acc_mean;
      ++n;
      max_stream = std::max(max_stream, r.stream_id);
    }
    std::vector<PlotSeries> series(max_stream + 1);
    for (int s = 0; s <= max_stream; ++s)
      series[s].name = "stream " + std::to_string(s);
    for (const auto& [key, val] : acc) {
      series[key.first].x.push_back(key.second);
      series[key.first].y.push_back(val.first / val.second);
    }
    write_line_plot_svg(fs::path(out_dir) / "accuracy_vs_phase.svg",
                        "Accuracy per phase", "phase", "accuracy", series);
  }
}

}  // namespace stam
