#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>

#include "stam/experiment.hpp"
#include "stam/synth.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

// Writes a small synthetic IDX dataset (10x10 digits) into `dir` and returns
// a fast-but-complete config: 2 layers, 2 phases over classes 0..3.
stam::ExperimentConfig base_config(const testutil::TempDir& dir,
                                   const std::string& out_name) {
  const fs::path root = dir.path();
  if (!fs::exists(root / "train-images")) {
    stam::write_idx_images(root / "train-images",
                           stam::make_synthetic_digits(20, 1, 10));
    std::vector<int> train_labels;
    for (int d = 0; d < 10; ++d)
      for (int i = 0; i < 20; ++i) train_labels.push_back(d);
    stam::write_idx_labels(root / "train-labels", train_labels);
    stam::write_idx_images(root / "test-images",
                           stam::make_synthetic_digits(8, 2, 10));
    std::vector<int> test_labels;
    for (int d = 0; d < 10; ++d)
      for (int i = 0; i < 8; ++i) test_labels.push_back(d);
    stam::write_idx_labels(root / "test-labels", test_labels);
  }
  stam::ExperimentConfig cfg;
  cfg.train_images = (root / "train-images").string();
  cfg.train_labels = (root / "train-labels").string();
  cfg.test_images = (root / "test-images").string();
  cfg.test_labels = (root / "test-labels").string();
  cfg.phases = {{0, 1}, {2, 3}};
  cfg.examples_per_phase = 60;
  cfg.stream_repeats = 1;
  cfg.rho = {3, 5};
  cfg.delta = {24};
  cfg.alpha = {0.5};
  cfg.theta = {4.0};
  cfg.beta = {0.95};
  cfg.novelty_window = 200;
  cfg.novelty_warmup = 20;
  cfg.labels_per_class = 3;
  cfg.test_per_class = 5;
  cfg.eval_repeats = 1;
  cfg.kmeans_restarts = 2;
  cfg.master_seed = 42;
  cfg.has_master_seed = true;
  cfg.fixed_clock = true;
  cfg.ltm_trace_every = 10;
  cfg.out_dir = (root / out_name).string();
  return cfg;
}

}  // namespace

TEST_CASE("experiment produces the full metrics grid plus artifacts") {
  testutil::TempDir dir("exp");
  stam::ExperimentConfig cfg = base_config(dir, "out");
  cfg.stream_repeats = 2;
  cfg.eval_repeats = 2;
  const stam::ExperimentResult res = stam::run_experiment(cfg);

  REQUIRE(res.num_layers == 2);
  REQUIRE(res.rows.size() == 8);  // 2 streams x 2 phases x 2 evals
  std::size_t i = 0;
  for (int s = 0; s < 2; ++s)
    for (int p = 1; p <= 2; ++p)
      for (int e = 0; e < 2; ++e, ++i) {
        const stam::PhaseMetrics& r = res.rows[i];
        REQUIRE(r.stream_id == s);
        REQUIRE(r.phase == p);
        REQUIRE(r.eval_id == e);
        const std::vector<int> want_classes =
            p == 1 ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 2, 3};
        REQUIRE(r.classes_seen == want_classes);
        REQUIRE(r.acc_per_class.size() == want_classes.size());
        REQUIRE(r.acc_mean >= 0.0);
        REQUIRE(r.acc_mean <= 1.0);
        REQUIRE(r.cluster_acc >= 0.0);
        REQUIRE(r.cluster_acc <= 1.0);
        REQUIRE(r.abstain_rate >= 0.0);
        REQUIRE(r.abstain_rate <= 1.0);
        REQUIRE(r.ltm_counts.size() == 2);
        REQUIRE(r.footprint_px ==
                9 * (r.ltm_counts[0] + 24) + 25 * (r.ltm_counts[1] + 24));
        REQUIRE(r.seconds == 0.0);
      }
  // memory is append-only, so the final phase holds the most centroids
  const auto total = [](const stam::PhaseMetrics& r) {
    return r.ltm_counts[0] + r.ltm_counts[1];
  };
  REQUIRE(total(res.rows[2]) > 0);
  REQUIRE(total(res.rows[2]) >= total(res.rows[0]));

  const fs::path out = cfg.out_dir;
  for (const char* name : {"metrics.csv", "summary.csv", "ltm_trace_s0.csv",
                           "ltm_trace_s1.csv"})
    REQUIRE(fs::exists(out / name));
  std::size_t layers = 0;
  const auto parsed = stam::parse_metrics_csv(out / "metrics.csv", &layers);
  REQUIRE(layers == 2);
  REQUIRE(parsed.size() == res.rows.size());
  REQUIRE(parsed[3].classes_seen == res.rows[3].classes_seen);
  REQUIRE(parsed[3].ltm_counts == res.rows[3].ltm_counts);
  REQUIRE(parsed[3].footprint_px == res.rows[3].footprint_px);
  REQUIRE(testutil::read_file(out / "summary.csv").rfind("phase,n,", 0) == 0);

  // traces are dense (every 10 images + phase ends) and monotone
  REQUIRE(res.traces.size() == 2);
  REQUIRE(!res.traces[0].empty());
  for (std::size_t t = 1; t < res.traces[0].size(); ++t) {
    REQUIRE(res.traces[0][t].images >= res.traces[0][t - 1].images);
    REQUIRE(res.traces[0][t].per_layer[0] >= res.traces[0][t - 1].per_layer[0]);
  }
  REQUIRE(res.traces[0].back().images == 120);
}

TEST_CASE("fixed clock makes reruns byte-identical") {
  testutil::TempDir dir("exp");
  stam::ExperimentConfig a = base_config(dir, "out_a");
  stam::ExperimentConfig b = base_config(dir, "out_b");
  stam::run_experiment(a);
  stam::run_experiment(b);
  const std::string ma = testutil::read_file(fs::path(a.out_dir) / "metrics.csv");
  const std::string mb = testutil::read_file(fs::path(b.out_dir) / "metrics.csv");
  REQUIRE(!ma.empty());
  REQUIRE(ma == mb);
  REQUIRE(testutil::read_file(fs::path(a.out_dir) / "summary.csv") ==
          testutil::read_file(fs::path(b.out_dir) / "summary.csv"));
}

TEST_CASE("theta = inf leaves long-term memory empty and rows degenerate") {
  testutil::TempDir dir("exp");
  stam::ExperimentConfig cfg = base_config(dir, "out");
  cfg.theta = {std::numeric_limits<double>::infinity()};
  const stam::ExperimentResult res = stam::run_experiment(cfg);
  REQUIRE(res.rows.size() == 2);
  for (const auto& r : res.rows) {
    REQUIRE(r.ltm_counts == std::vector<std::uint64_t>{0, 0});
    REQUIRE(r.acc_mean == 0.0);
    REQUIRE(r.cluster_acc == 0.0);
    REQUIRE(r.abstain_rate == 1.0);
    REQUIRE(r.footprint_px == 9 * 24 + 25 * 24);
    for (double a : r.acc_per_class) REQUIRE(a == 0.0);
  }
}

TEST_CASE("ablations redirect output and change the memory profile") {
  testutil::TempDir dir("exp");
  const stam::ExperimentConfig cfg = base_config(dir, "out");

  const auto no_ltm = stam::run_ablation(cfg, stam::AblationKind::no_ltm);
  const fs::path no_ltm_dir = fs::path(cfg.out_dir) / "ablation_no_ltm";
  REQUIRE(fs::exists(no_ltm_dir / "metrics.csv"));
  for (const auto& r : no_ltm.rows)
    REQUIRE(r.ltm_counts == std::vector<std::uint64_t>{0, 0});

  const auto dropped = stam::run_ablation(cfg, stam::AblationKind::drop_layers,
                                          {2});
  REQUIRE(fs::exists(fs::path(cfg.out_dir) / "ablation_drop_l2" /
                     "metrics.csv"));
  for (const auto& r : dropped.rows) {
    REQUIRE(r.ltm_counts[1] == 0);
    REQUIRE(r.footprint_px == 9 * (r.ltm_counts[0] + 24));  // layer 2 inert
  }

  stam::run_ablation(cfg, stam::AblationKind::dynamic_ltm);
  REQUIRE(fs::exists(fs::path(cfg.out_dir) / "ablation_dynamic_ltm" /
                     "metrics.csv"));

  REQUIRE_THROWS_AS(stam::run_ablation(cfg, stam::AblationKind::drop_layers),
                    stam::config_error);
}

TEST_CASE("sweep writes one subdirectory per value plus a merged csv") {
  testutil::TempDir dir("exp");
  const stam::ExperimentConfig cfg = base_config(dir, "out");
  const auto results = stam::run_sweep(cfg, "alpha", {0.05, 0.2});
  REQUIRE(results.size() == 2);
  REQUIRE(fs::exists(fs::path(cfg.out_dir) / "sweep_alpha_0.05" /
                     "metrics.csv"));
  REQUIRE(fs::exists(fs::path(cfg.out_dir) / "sweep_alpha_0.2" /
                     "metrics.csv"));
  const std::string merged =
      testutil::read_file(fs::path(cfg.out_dir) / "sweep_alpha.csv");
  REQUIRE(merged.rfind("value,phase,acc_mean,acc_std,cluster_mean,"
                       "ltm_total_mean,footprint_mean\n", 0) == 0);
  REQUIRE(merged.find("\n0.05,1,") != std::string::npos);
  REQUIRE(merged.find("\n0.05,2,") != std::string::npos);
  REQUIRE(merged.find("\n0.2,1,") != std::string::npos);
  REQUIRE(merged.find("\n0.2,2,") != std::string::npos);

  REQUIRE_THROWS_AS(stam::run_sweep(cfg, "alpha", {}), stam::config_error);
}

TEST_CASE("report rebuilds the summary from metrics.csv alone") {
  testutil::TempDir dir("exp");
  const stam::ExperimentConfig cfg = base_config(dir, "out");
  stam::run_experiment(cfg);
  const fs::path out = cfg.out_dir;
  const std::string before = testutil::read_file(out / "summary.csv");
  fs::remove(out / "summary.csv");
  stam::emit_report(out, false);
  REQUIRE(testutil::read_file(out / "summary.csv") == before);

  // a header-only metrics file has nothing to report
  const fs::path empty_dir = dir.path() / "empty_out";
  fs::create_directories(empty_dir);
  testutil::write_text(empty_dir / "metrics.csv", stam::metrics_header(2) + "\n");
  REQUIRE_THROWS_AS(stam::emit_report(empty_dir, false), stam::eval_error);
}

TEST_CASE("pca baseline writes per-phase rows honoring the schedule") {
  testutil::TempDir dir("exp");
  stam::ExperimentConfig cfg = base_config(dir, "out");
  cfg.pca_baseline = true;
  cfg.pca_schedule = {1, 2};
  cfg.eval_repeats = 2;
  cfg.save_snapshots = true;
  const stam::ExperimentResult res = stam::run_experiment(cfg);
  REQUIRE(res.pca_rows.size() == 4);  // 2 phases x 2 evals
  for (const auto& pm : res.pca_rows) {
    REQUIRE(pm.m_components == pm.phase);  // schedule pins 1 then 2
    REQUIRE(pm.acc_mean >= 0.0);
    REQUIRE(pm.acc_mean <= 1.0);
    REQUIRE(pm.cluster_acc >= 0.0);
    REQUIRE(pm.cluster_acc <= 1.0);
  }
  const std::string csv =
      testutil::read_file(fs::path(cfg.out_dir) / "pca_metrics.csv");
  REQUIRE(csv.rfind("stream_id,eval_id,phase,m_components,acc_mean,"
                    "cluster_acc\n", 0) == 0);
  const stam::PcaModel model =
      stam::load_pca(fs::path(cfg.out_dir) / "pca_s0.snap");
  REQUIRE(model.m == 2);
}

TEST_CASE("init override validates against the stream length") {
  testutil::TempDir dir("exp");
  stam::ExperimentConfig cfg = base_config(dir, "out");
  cfg.init_images = 2;
  REQUIRE(stam::run_experiment(cfg).rows.size() == 2);
  cfg.init_images = 9999;
  cfg.out_dir = (dir.path() / "out2").string();
  REQUIRE_THROWS_AS(stam::run_experiment(cfg), stam::data_error);
}

TEST_CASE("snapshots, embeddings and plots are written on demand") {
  testutil::TempDir dir("exp");
  stam::ExperimentConfig cfg = base_config(dir, "out");
  cfg.save_snapshots = true;
  cfg.dump_embeddings = true;
  cfg.plots = true;
  stam::run_experiment(cfg);
  const fs::path out = cfg.out_dir;

  const stam::Hierarchy h =
      stam::load_hierarchy(out / "snapshot_s0.snap");
  REQUIRE(h.num_layers() == 2);
  REQUIRE(h.images_processed() == 120);

  const std::string emb = testutil::read_file(out / "embeddings_s0.csv");
  REQUIRE(emb.rfind("image_id,label,l1_c0", 0) == 0);

  for (const char* name : {"accuracy_vs_phase.svg", "ltm_growth.svg"}) {
    const std::string svg = testutil::read_file(out / name);
    REQUIRE(svg.rfind("<svg", 0) == 0);
  }
}
