#pragma once

// metrics.csv has a fixed column set:
//   stream_id, eval_id, phase, classes_seen (semicolon-joined), acc_mean,
//   acc_per_class (semicolon-joined), cluster_acc, ltm_l1..ltm_lN,
//   cin_l1..cin_lN, abstain_rate, footprint_px, seconds
// summary.csv aggregates mean/std per phase. Formatting goes through
// snprintf with fixed precision so identical runs write identical bytes.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stam/errors.hpp"

namespace stam {

struct PhaseMetrics {
  int stream_id = 0;
  int eval_id = 0;
  int phase = 0;  // 1-based in reports
  std::vector<int> classes_seen;
  double acc_mean = 0.0;
  std::vector<double> acc_per_class;  // aligned with classes_seen
  double cluster_acc = 0.0;
  std::vector<std::uint64_t> ltm_counts;   // per layer
  std::vector<double> cin_fractions;       // per layer
  double abstain_rate = 0.0;
  std::uint64_t footprint_px = 0;
  double seconds = 0.0;
};

namespace metrics_detail {

inline std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

template <class T, class F>
inline std::string join(const std::vector<T>& v, char sep, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += f(v[i]);
  }
  return out;
}

struct MeanStd {
  double mean = 0.0, std = 0.0;
  std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  r.n = v.size();
  if (!r.n) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(r.n);
  if (r.n > 1) {
    double s = 0.0;
    for (double x : v) s += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(s / static_cast<double>(r.n - 1));
  }
  return r;
}

}  // namespace metrics_detail

inline std::string metrics_header(std::size_t num_layers) {
  std::string h =
      "stream_id,eval_id,phase,classes_seen,acc_mean,acc_per_class,cluster_acc";
  for (std::size_t l = 1; l <= num_layers; ++l)
    h += ",ltm_l" + std::to_string(l);
  for (std::size_t l = 1; l <= num_layers; ++l)
    h += ",cin_l" + std::to_string(l);
  h += ",abstain_rate,footprint_px,seconds";
  return h;
}

inline std::string metrics_row(const PhaseMetrics& m, std::size_t num_layers) {
  using namespace metrics_detail;
  if (m.ltm_counts.size() != num_layers || m.cin_fractions.size() != num_layers)
    throw eval_error("metrics_row: layer column mismatch");
  std::string row;
  row += std::to_string(m.stream_id);
  row += ',' + std::to_string(m.eval_id);
  row += ',' + std::to_string(m.phase);
  row += ',' + join(m.classes_seen, ';',
                    [](int c) { return std::to_string(c); });
  row += ',' + fmt(m.acc_mean);
  row += ',' + join(m.acc_per_class, ';', [](double v) { return fmt(v); });
  row += ',' + fmt(m.cluster_acc);
  for (std::uint64_t c : m.ltm_counts) row += ',' + std::to_string(c);
  for (double f : m.cin_fractions) row += ',' + fmt(f);
  row += ',' + fmt(m.abstain_rate);
  row += ',' + std::to_string(m.footprint_px);
  row += ',' + fmt(m.seconds, "%.3f");
  return row;
}

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<PhaseMetrics>& rows,
                              std::size_t num_layers) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out << metrics_header(num_layers) << "\n";
  for (const auto& m : rows) out << metrics_row(m, num_layers) << "\n";
  if (!out) throw data_error("short write " + path.string());
}

// Per-phase aggregate over all (stream, eval) rows.
inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<PhaseMetrics>& rows,
                              std::size_t num_layers) {
  using namespace metrics_detail;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out << "phase,n,acc_mean,acc_std,cluster_mean,cluster_std,abstain_mean";
  for (std::size_t l = 1; l <= num_layers; ++l)
    out << ",ltm_l" << l << "_mean";
  out << ",footprint_mean\n";
  std::map<int, std::vector<const PhaseMetrics*>> by_phase;
  for (const auto& m : rows) by_phase[m.phase].push_back(&m);
  for (const auto& [phase, group] : by_phase) {
    std::vector<double> acc, clu, abst;
    std::vector<double> ltm(num_layers, 0.0);
    double foot = 0.0;
    for (const auto* m : group) {
      acc.push_back(m->acc_mean);
      clu.push_back(m->cluster_acc);
      abst.push_back(m->abstain_rate);
      for (std::size_t l = 0; l < num_layers; ++l)
        ltm[l] += static_cast<double>(m->ltm_counts[l]);
      foot += static_cast<double>(m->footprint_px);
    }
    const auto a = mean_std(acc), c = mean_std(clu), b = mean_std(abst);
    out << phase << ',' << group.size() << ',' << fmt(a.mean) << ','
        << fmt(a.std) << ',' << fmt(c.mean) << ',' << fmt(c.std) << ','
        << fmt(b.mean);
    for (std::size_t l = 0; l < num_layers; ++l)
      out << ',' << fmt(ltm[l] / static_cast<double>(group.size()), "%.2f");
    out << ',' << fmt(foot / static_cast<double>(group.size()), "%.1f")
        << "\n";
  }
  if (!out) throw data_error("short write " + path.string());
}

// LTM growth trace: one row per sampled image count, per stream.
struct LtmTracePoint {
  std::uint64_t images = 0;
  std::vector<std::uint64_t> per_layer;
};

inline void write_ltm_trace_csv(const std::filesystem::path& path,
                                const std::vector<LtmTracePoint>& trace,
                                std::size_t num_layers) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out << "images";
  for (std::size_t l = 1; l <= num_layers; ++l) out << ",ltm_l" << l;
  out << "\n";
  for (const auto& t : trace) {
    out << t.images;
    for (std::uint64_t v : t.per_layer) out << ',' << v;
    out << "\n";
  }
  if (!out) throw data_error("short write " + path.string());
}

// Reads back our own metrics.csv (for the `report` subcommand).
inline std::vector<PhaseMetrics> parse_metrics_csv(
    const std::filesystem::path& path, std::size_t* num_layers_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw data_error("metrics csv: empty file " + path.string());
  std::size_t num_layers = 0;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ','))
      if (col.rfind("ltm_l", 0) == 0) ++num_layers;
  }
  if (header != metrics_header(num_layers))
    throw data_error("metrics csv: unexpected header in " + path.string());
  if (num_layers_out) *num_layers_out = num_layers;
  std::vector<PhaseMetrics> rows;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    const std::size_t want = 7 + 2 * num_layers + 3;
    if (cells.size() != want)
      throw data_error("metrics csv line " + std::to_string(lineno) +
                       ": expected " + std::to_string(want) + " cells");
    PhaseMetrics m;
    std::size_t i = 0;
    m.stream_id = std::stoi(cells[i++]);
    m.eval_id = std::stoi(cells[i++]);
    m.phase = std::stoi(cells[i++]);
    {
      std::stringstream cs(cells[i++]);
      std::string part;
      while (std::getline(cs, part, ';'))
        if (!part.empty()) m.classes_seen.push_back(std::stoi(part));
    }
    m.acc_mean = std::stod(cells[i++]);
    {
      std::stringstream cs(cells[i++]);
      std::string part;
      while (std::getline(cs, part, ';'))
        if (!part.empty()) m.acc_per_class.push_back(std::stod(part));
    }
    m.cluster_acc = std::stod(cells[i++]);
    for (std::size_t l = 0; l < num_layers; ++l)
      m.ltm_counts.push_back(std::stoull(cells[i++]));
    for (std::size_t l = 0; l < num_layers; ++l)
      m.cin_fractions.push_back(std::stod(cells[i++]));
    m.abstain_rate = std::stod(cells[i++]);
    m.footprint_px = std::stoull(cells[i++]);
    m.seconds = std::stod(cells[i++]);
    rows.push_back(std::move(m));
  }
  return rows;
}

}  // namespace stam
