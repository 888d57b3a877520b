#pragma once

// Experiment configuration: flat `key = value` text, '#' comments. Unknown
// keys are errors (typos must not silently fall back to defaults). The
// canonical key list doubles as documentation; see configs/example.conf.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/layer.hpp"
#include "stam/stream.hpp"

namespace stam {

struct ExperimentConfig {
  // data (IDX file pairs)
  std::string train_images, train_labels, test_images, test_labels;

  // stream protocol
  StreamMode stream_mode = StreamMode::incremental;
  std::vector<std::vector<int>> phases;
  int examples_per_phase = 8000;
  int stream_repeats = 3;

  // hierarchy (scalars broadcast across layers)
  std::vector<int> rho = {8, 13, 20};
  std::vector<int> delta = {400};
  std::vector<double> alpha = {0.1};
  std::vector<double> theta = {30.0};
  std::vector<double> beta = {0.95};
  std::vector<int> stride = {1};
  Metric metric = Metric::euclidean;
  int novelty_window = 2000;
  int novelty_warmup = 100;
  int init_images = 0;  // 0 = shortest prefix that fills every STM

  // evaluation
  double gamma = 0.15;
  int labels_per_class = 10;
  int test_per_class = 100;
  int eval_repeats = 5;
  int cluster_k_factor = 2;  // k = factor * |classes seen|
  int kmeans_restarts = 10;

  // ablations
  bool ltm_disabled = false;
  bool ltm_dynamic = false;
  std::vector<int> drop_layers;

  // PCA baseline
  bool pca_baseline = false;
  int pca_m_cap = 300;
  double pca_variance_target = 0.9;
  std::vector<int> pca_schedule;  // optional per-phase component counts
  int pca_knn_k = 5;

  // sweep axes (axis name -> values); run by the `sweep` subcommand
  std::map<std::string, std::vector<double>> sweeps;

  // output
  std::string out_dir = "out";
  std::uint64_t master_seed = 0;
  bool has_master_seed = false;
  bool plots = false;
  bool dump_embeddings = false;
  bool save_snapshots = false;
  bool fixed_clock = false;  // write 0.000 as the seconds column
  int ltm_trace_every = 1;   // images between LTM trace rows; 0 disables

  std::vector<LayerConfig> layer_configs() const {
    auto pick = [](const auto& v, std::size_t i) {
      return v.size() == 1 ? v[0] : v[i];
    };
    auto check = [&](std::size_t n, const char* name) {
      if (n != 1 && n != rho.size())
        throw config_error(std::string("config: ") + name +
                           " must have 1 or " + std::to_string(rho.size()) +
                           " entries");
    };
    if (rho.empty()) throw config_error("config: rho must not be empty");
    check(delta.size(), "delta");
    check(alpha.size(), "alpha");
    check(theta.size(), "theta");
    check(beta.size(), "beta");
    check(stride.size(), "stride");
    std::vector<LayerConfig> out;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      LayerConfig c;
      c.rho = rho[i];
      c.stm_capacity = pick(delta, i);
      c.alpha = pick(alpha, i);
      c.theta = pick(theta, i);
      c.beta = pick(beta, i);
      c.stride = pick(stride, i);
      c.metric = metric;
      c.novelty_window = novelty_window;
      c.novelty_warmup = novelty_warmup;
      c.validate();
      out.push_back(c);
    }
    return out;
  }

  StreamSpec stream_spec(std::uint64_t stream_seed) const {
    StreamSpec s;
    s.mode = stream_mode;
    s.phases = phases;
    s.examples_per_phase = examples_per_phase;
    s.seed = stream_seed;
    s.validate();
    return s;
  }

  void validate() const {
    if (!has_master_seed)
      throw config_error("config: master_seed is required (or pass --seed)");
    if (stream_repeats < 1) throw config_error("config: stream_repeats must be >= 1");
    if (eval_repeats < 1) throw config_error("config: eval_repeats must be >= 1");
    if (labels_per_class < 1) throw config_error("config: labels_per_class must be >= 1");
    if (test_per_class < 1) throw config_error("config: test_per_class must be >= 1");
    if (cluster_k_factor < 1) throw config_error("config: cluster_k_factor must be >= 1");
    if (kmeans_restarts < 1) throw config_error("config: kmeans_restarts must be >= 1");
    if (!(gamma >= 0.0)) throw config_error("config: gamma must be >= 0");
    if (pca_knn_k < 1) throw config_error("config: pca_knn_k must be >= 1");
    if (pca_m_cap < 1) throw config_error("config: pca_m_cap must be >= 1");
    if (init_images < 0) throw config_error("config: init_images must be >= 0");
    if (ltm_trace_every < 0) throw config_error("config: ltm_trace_every must be >= 0");
    layer_configs();
    stream_spec(0);
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw config_error("config: key '" + key + "' expects an integer, got '" +
                       v + "'");
  }
}

inline double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);  // accepts "inf"
  if (end != v.c_str() + v.size() || v.empty())
    throw config_error("config: key '" + key + "' expects a number, got '" +
                       v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error("config: key '" + key + "' expects a boolean, got '" + v +
                     "'");
}

inline std::vector<int> to_int_list(const std::string& key,
                                    const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(to_int(key, part));
  return out;
}

inline std::vector<double> to_double_list(const std::string& key,
                                          const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(to_double(key, part));
  return out;
}

// "0,1|2,3|4,5" -> [[0,1],[2,3],[4,5]]
inline std::vector<std::vector<int>> to_phases(const std::string& key,
                                               const std::string& v) {
  std::vector<std::vector<int>> out;
  for (const auto& group : split(v, '|')) out.push_back(to_int_list(key, group));
  return out;
}

}  // namespace config_detail

inline const std::set<std::string>& sweepable_axes() {
  static const std::set<std::string> axes = {
      "alpha", "beta", "gamma", "theta", "delta",
      "labels_per_class", "stream_length"};
  return axes;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  using namespace config_detail;
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) +
                         ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "train_images") cfg.train_images = val;
    else if (key == "train_labels") cfg.train_labels = val;
    else if (key == "test_images") cfg.test_images = val;
    else if (key == "test_labels") cfg.test_labels = val;
    else if (key == "stream_mode") {
      if (val == "incremental") cfg.stream_mode = StreamMode::incremental;
      else if (val == "uniform") cfg.stream_mode = StreamMode::uniform;
      else throw config_error("config: stream_mode must be incremental|uniform");
    }
    else if (key == "phases") cfg.phases = to_phases(key, val);
    else if (key == "examples_per_phase") cfg.examples_per_phase = to_int(key, val);
    else if (key == "stream_repeats") cfg.stream_repeats = to_int(key, val);
    else if (key == "rho") cfg.rho = to_int_list(key, val);
    else if (key == "delta") cfg.delta = to_int_list(key, val);
    else if (key == "alpha") cfg.alpha = to_double_list(key, val);
    else if (key == "theta") cfg.theta = to_double_list(key, val);
    else if (key == "beta") cfg.beta = to_double_list(key, val);
    else if (key == "stride") cfg.stride = to_int_list(key, val);
    else if (key == "metric") {
      if (val == "euclidean") cfg.metric = Metric::euclidean;
      else if (val == "manhattan") cfg.metric = Metric::manhattan;
      else throw config_error("config: metric must be euclidean|manhattan");
    }
    else if (key == "novelty_window") cfg.novelty_window = to_int(key, val);
    else if (key == "novelty_warmup") cfg.novelty_warmup = to_int(key, val);
    else if (key == "init_images") cfg.init_images = to_int(key, val);
    else if (key == "gamma") cfg.gamma = to_double(key, val);
    else if (key == "labels_per_class") cfg.labels_per_class = to_int(key, val);
    else if (key == "test_per_class") cfg.test_per_class = to_int(key, val);
    else if (key == "eval_repeats") cfg.eval_repeats = to_int(key, val);
    else if (key == "cluster_k_factor") cfg.cluster_k_factor = to_int(key, val);
    else if (key == "kmeans_restarts") cfg.kmeans_restarts = to_int(key, val);
    else if (key == "ltm_disabled") cfg.ltm_disabled = to_bool(key, val);
    else if (key == "ltm_dynamic") cfg.ltm_dynamic = to_bool(key, val);
    else if (key == "drop_layers") cfg.drop_layers = to_int_list(key, val);
    else if (key == "pca_baseline") cfg.pca_baseline = to_bool(key, val);
    else if (key == "pca_m_cap") cfg.pca_m_cap = to_int(key, val);
    else if (key == "pca_variance_target") cfg.pca_variance_target = to_double(key, val);
    else if (key == "pca_schedule") cfg.pca_schedule = to_int_list(key, val);
    else if (key == "pca_knn_k") cfg.pca_knn_k = to_int(key, val);
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "master_seed") {
      cfg.master_seed = static_cast<std::uint64_t>(
          std::strtoull(val.c_str(), nullptr, 10));
      cfg.has_master_seed = true;
    }
    else if (key == "plots") cfg.plots = to_bool(key, val);
    else if (key == "dump_embeddings") cfg.dump_embeddings = to_bool(key, val);
    else if (key == "save_snapshots") cfg.save_snapshots = to_bool(key, val);
    else if (key == "fixed_clock") cfg.fixed_clock = to_bool(key, val);
    else if (key == "ltm_trace_every") cfg.ltm_trace_every = to_int(key, val);
    else if (key.rfind("sweep_", 0) == 0) {
      const std::string axis = key.substr(6);
      if (!sweepable_axes().count(axis))
        throw config_error("config: unknown sweep axis '" + axis + "'");
      cfg.sweeps[axis] = to_double_list(key, val);
    }
    else throw config_error("config: unknown key '" + key + "'");
  }
  return cfg;
}

// Parse + check that every referenced dataset file exists.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config_text(ss.str());
  for (const std::string* p : {&cfg.train_images, &cfg.train_labels,
                               &cfg.test_images, &cfg.test_labels}) {
    if (p->empty())
      throw config_error("config: all four dataset paths are required");
    if (!std::filesystem::exists(*p))
      throw config_error("config: missing file " + *p);
  }
  return cfg;
}

}  // namespace stam
