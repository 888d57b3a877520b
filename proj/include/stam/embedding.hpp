#pragma once

// Associative embedding: one coordinate per evaluation-tier centroid, value
// exp(-min_patch d / dbar_l) where the min runs over the image's layer-l
// patches. Entries land in (0, 1]; higher means the image expresses that
// centroid somewhere.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "stam/errors.hpp"
#include "stam/hierarchy.hpp"
#include "stam/image.hpp"
#include "stam/patch.hpp"
#include "stam/prefilter.hpp"

namespace stam {

struct EmbeddingVector {
  std::vector<double> values;
  // (layer index, pool index) per coordinate, aligned with values.
  std::vector<std::pair<int, std::size_t>> index_map;
};

inline EmbeddingVector embed(const Hierarchy& h, const Image& im) {
  const SearchTier tier = h.eval_tier();
  EmbeddingVector out;
  std::size_t pool_total = 0;
  for (std::size_t l = 0; l < h.num_layers(); ++l) {
    if (!h.layer_active(l)) continue;
    const LayerMemory& mem = h.layer(l);
    const auto& pool =
        tier == SearchTier::stm_only ? mem.stm() : mem.ltm();
    pool_total += pool.size();
    if (pool.empty()) continue;
    const LayerConfig& c = mem.config();
    const double dbar = mem.dbar();
    if (!(dbar > 0.0))
      throw state_error("embed: dbar must be positive (no stream processed)");
    // Per-centroid min over a certified patch window (prefilter.hpp): every
    // patch that could attain the min is in the window, and window members
    // are resolved with the exact comparator, so the min value matches a
    // full patch sweep bit-for-bit. The running min still aborts candidates
    // early (monotone lower bound).
    const Tier pool_tier = tier == SearchTier::stm_only ? Tier::stm : Tier::ltm;
    const double* base = mem.pool_values(pool_tier).data();
    const std::size_t dim = c.dim();
    std::vector<Patch> patches = extract_patches(im, c.rho, c.stride);
    for (Patch& p : patches) normalize_patch(p.values);
    PrefilterCache cache(mem, patches, PrefilterAxis::by_centroid);
    std::vector<double> best(pool.size(), metric_detail::kInf);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      double& b = best[i];
      const double* cv = base + i * dim;
      for (std::uint32_t k : cache.patch_window(pool_tier, i)) {
        const double* pv = patches[k].values.data();
        const double v = c.metric == Metric::manhattan
                             ? metric_detail::cmp_value_pruned<true>(
                                   pv, cv, dim, metric_detail::kInf, b)
                             : metric_detail::cmp_value_pruned<false>(
                                   pv, cv, dim, metric_detail::kInf, b);
        if (v < b) b = v;
      }
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double d = metric_detail::cmp_to_distance(best[i], c.metric);
      out.values.push_back(std::exp(-d / dbar));
      out.index_map.emplace_back(static_cast<int>(l), i);
    }
  }
  if (pool_total == 0)
    throw state_error("embed: no centroids in evaluation tier");
  return out;
}

// One row per image: id, label, then the coordinates named l<layer>_c<index>.
inline void write_embeddings_csv(const std::filesystem::path& path,
                                 const std::vector<int>& image_ids,
                                 const std::vector<int>& labels,
                                 const std::vector<EmbeddingVector>& embs) {
  if (embs.empty()) throw eval_error("write_embeddings_csv: nothing to write");
  if (image_ids.size() != embs.size() || labels.size() != embs.size())
    throw eval_error("write_embeddings_csv: length mismatch");
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path.string());
  out << "image_id,label";
  for (const auto& [l, i] : embs[0].index_map)
    out << ",l" << (l + 1) << "_c" << i;
  out << "\n";
  char buf[32];
  for (std::size_t r = 0; r < embs.size(); ++r) {
    if (embs[r].values.size() != embs[0].values.size())
      throw eval_error("write_embeddings_csv: ragged embeddings");
    out << image_ids[r] << "," << labels[r];
    for (double v : embs[r].values) {
      std::snprintf(buf, sizeof buf, "%.9f", v);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw data_error("short write " + path.string());
}

}  // namespace stam
