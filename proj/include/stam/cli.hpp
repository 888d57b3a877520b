#pragma once

// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 data error, 4 evaluation error (1 for internal bugs).

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "stam/config.hpp"
#include "stam/errors.hpp"
#include "stam/experiment.hpp"
#include "stam/idx.hpp"
#include "stam/pca.hpp"
#include "stam/snapshot.hpp"
#include "stam/synth.hpp"

namespace stam {
namespace cli {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool plots = false;
  int phases = 0;
  int np = 0;
  int labels = 0;

  void attach(CLI::App* cmd, bool config_required = true) {
    auto* c = cmd->add_option("--config", config_path, "experiment config file");
    if (config_required) c->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", seed, "master seed (overrides config)")
        ->each([this](const std::string&) { seed_set = true; });
    cmd->add_flag("--plots", plots, "write SVG plots");
    cmd->add_option("--phases", phases, "use only the first N phases");
    cmd->add_option("--np", np, "examples per phase");
    cmd->add_option("--labels", labels, "labeled examples per class");
  }

  ExperimentConfig load() const {
    ExperimentConfig cfg = load_config(config_path);
    if (seed_set) {
      cfg.master_seed = seed;
      cfg.has_master_seed = true;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (plots) cfg.plots = true;
    if (phases > 0) {
      if (static_cast<std::size_t>(phases) > cfg.phases.size())
        throw config_error("--phases exceeds the config's phase count");
      cfg.phases.resize(phases);
    }
    if (np > 0) cfg.examples_per_phase = np;
    if (labels > 0) cfg.labels_per_class = labels;
    return cfg;
  }
};

inline void print_inspect(std::ostream& os, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = snap_detail::read_file(path);
  snap_detail::Reader probe(bytes);
  const std::uint8_t kind = snap_detail::read_header(probe);
  if (kind == kSnapshotHierarchy) {
    const Hierarchy h = deserialize_hierarchy(bytes);
    os << "kind: hierarchy\n";
    os << "layers: " << h.num_layers() << "\n";
    for (std::size_t l = 0; l < h.num_layers(); ++l) {
      const LayerMemory& m = h.layer(l);
      const LayerConfig& c = m.config();
      os << "  layer " << (l + 1) << ": rho " << c.rho << " stm "
         << m.stm().size() << "/" << c.stm_capacity << " ltm "
         << m.ltm().size() << " dbar " << m.dbar() << " events "
         << m.event_clock() << (h.layer_active(l) ? "" : " (dropped)")
         << "\n";
    }
    os << "images_processed: " << h.images_processed() << "\n";
    os << "footprint_px: " << h.memory_footprint() << "\n";
    const auto& f = h.flags();
    os << "ablations: ltm_disabled=" << (f.ltm_disabled ? "true" : "false")
       << " ltm_dynamic=" << (f.ltm_dynamic ? "true" : "false") << "\n";
  } else if (kind == kSnapshotPca) {
    const PcaModel m = deserialize_pca(bytes);
    os << "kind: pca\n";
    os << "input_dim: " << m.input_dim << "\n";
    os << "components: " << m.m << "\n";
    double acc = 0.0;
    for (double e : m.explained) acc += e;
    os << "explained_variance: " << acc << "\n";
  } else {
    throw data_error("inspect-snapshot: unknown snapshot kind");
  }
}

inline int dispatch(int argc, const char* const* argv, std::ostream& os,
                    std::ostream& es) {
  CLI::App app{"stam: streaming self-taught associative memory"};
  app.require_subcommand(1);

  CommonFlags run_flags, ablate_flags, sweep_flags;
  auto* cmd_run = app.add_subcommand("run", "run an experiment");
  run_flags.attach(cmd_run);

  auto* cmd_ablate = app.add_subcommand("ablate", "run one ablation variant");
  ablate_flags.attach(cmd_ablate);
  std::string ablation;
  std::vector<int> drop_ids;
  cmd_ablate
      ->add_option("--ablation", ablation,
                   "no_ltm | dynamic_ltm | drop_layers")
      ->required();
  cmd_ablate->add_option("--drop", drop_ids,
                         "layer ids to drop (with --ablation drop_layers)");

  auto* cmd_sweep = app.add_subcommand("sweep", "run the config's sweep axes");
  sweep_flags.attach(cmd_sweep);

  auto* cmd_report = app.add_subcommand(
      "report", "rebuild summary (and plots) from an existing metrics.csv");
  std::string report_dir;
  bool report_plots = false;
  cmd_report->add_option("--out", report_dir, "directory with metrics.csv")
      ->required();
  cmd_report->add_flag("--plots", report_plots, "write SVG plots");

  auto* cmd_inspect =
      app.add_subcommand("inspect-snapshot", "describe a snapshot file");
  std::string snap_path;
  cmd_inspect->add_option("path", snap_path, "snapshot file")->required();

  auto* cmd_make = app.add_subcommand(
      "make-dataset", "write a synthetic 10-class digit dataset (IDX files)");
  std::string make_out;
  int make_train = 1200, make_test = 200, make_size = 28;
  std::uint64_t make_seed = 1;
  cmd_make->add_option("--out", make_out, "output directory")->required();
  cmd_make->add_option("--train-per-class", make_train, "training images per class");
  cmd_make->add_option("--test-per-class", make_test, "test images per class");
  cmd_make->add_option("--seed", make_seed, "generator seed");
  cmd_make->add_option("--size", make_size, "image side length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, os, es);
    return rc == 0 ? 0 : 2;  // usage problems are configuration errors
  }

  try {
    if (cmd_run->parsed()) {
      const ExperimentConfig cfg = run_flags.load();
      const ExperimentResult res = run_experiment(cfg);
      os << "wrote " << res.rows.size() << " metric rows to " << cfg.out_dir
         << "/metrics.csv\n";
    } else if (cmd_ablate->parsed()) {
      const ExperimentConfig cfg = ablate_flags.load();
      static const std::map<std::string, AblationKind> kinds = {
          {"no_ltm", AblationKind::no_ltm},
          {"dynamic_ltm", AblationKind::dynamic_ltm},
          {"drop_layers", AblationKind::drop_layers}};
      const auto it = kinds.find(ablation);
      if (it == kinds.end())
        throw config_error("unknown ablation '" + ablation + "'");
      const ExperimentResult res = run_ablation(cfg, it->second, drop_ids);
      os << "ablation " << ablation << ": " << res.rows.size()
         << " metric rows under " << cfg.out_dir << "\n";
    } else if (cmd_sweep->parsed()) {
      const ExperimentConfig cfg = sweep_flags.load();
      if (cfg.sweeps.empty())
        throw config_error("sweep: config defines no sweep_<axis> keys");
      for (const auto& [axis, values] : cfg.sweeps) {
        run_sweep(cfg, axis, values);
        os << "swept " << axis << " over " << values.size()
           << " values under " << cfg.out_dir << "\n";
      }
    } else if (cmd_report->parsed()) {
      emit_report(report_dir, report_plots);
      os << "report rebuilt in " << report_dir << "\n";
    } else if (cmd_inspect->parsed()) {
      print_inspect(os, snap_path);
    } else if (cmd_make->parsed()) {
      namespace fs = std::filesystem;
      fs::create_directories(make_out);
      const auto train = make_synthetic_digits(make_train, make_seed, make_size);
      const auto test = make_synthetic_digits(
          make_test, derive_seed(make_seed, "test-split"), make_size);
      auto labels_of = [](const std::vector<Image>& v) {
        std::vector<int> out;
        for (const auto& im : v) out.push_back(im.label);
        return out;
      };
      write_idx_images(fs::path(make_out) / "train-images-idx3-ubyte", train);
      write_idx_labels(fs::path(make_out) / "train-labels-idx1-ubyte",
                       labels_of(train));
      write_idx_images(fs::path(make_out) / "t10k-images-idx3-ubyte", test);
      write_idx_labels(fs::path(make_out) / "t10k-labels-idx1-ubyte",
                       labels_of(test));
      os << "wrote " << train.size() << " train / " << test.size()
         << " test images to " << make_out << "\n";
    }
  } catch (const config_error& e) {
    es << "config error: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    es << "data error: " << e.what() << "\n";
    return 3;
  } catch (const eval_error& e) {
    es << "evaluation error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    es << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cli
}  // namespace stam
