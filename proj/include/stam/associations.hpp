#pragma once

// Centroid-class association table built from a small labeled set. Each
// labeled patch deposits affinity mass exp(-d / dbar) on its nearest
// evaluation-tier centroid under the example's class; per-centroid masses are
// normalized into a distribution g, and a centroid is class-informative (CIN)
// when max_k g(k) strictly exceeds 1/|L| + gamma.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/hierarchy.hpp"
#include "stam/stream.hpp"

namespace stam {

inline double patch_affinity(double distance, double dbar) {
  if (!(dbar > 0.0))
    throw state_error("patch_affinity: dbar must be positive (no stream processed)");
  return std::exp(-distance / dbar);
}

struct ClassAssociation {
  std::vector<double> g;      // distribution over classes (sums to 1)
  bool cin = false;
  int argmax_class = 0;       // index into Associations::classes
  double argmax_value = 0.0;  // max_k g(k)
};

struct Associations {
  std::vector<int> classes;  // ascending labeled class ids
  SearchTier tier = SearchTier::ltm_only;
  double gamma = 0.0;
  std::vector<double> dbar;  // frozen per layer at eval start (0 if unused)
  // per_layer[l] is aligned with the layer's evaluation pool; empty for
  // dropped layers and layers whose pool is empty.
  std::vector<std::vector<ClassAssociation>> per_layer;

  double cin_fraction(std::size_t layer) const {
    const auto& v = per_layer[layer];
    if (v.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& a : v) n += a.cin ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(v.size());
  }
};

inline Associations compute_associations(const Hierarchy& h,
                                         const LabeledSet& labeled,
                                         double gamma) {
  if (labeled.examples.empty())
    throw eval_error("compute_associations: empty labeled set");
  if (labeled.classes.empty())
    throw eval_error("compute_associations: no labeled classes");
  Associations out;
  out.classes = labeled.classes;
  out.tier = h.eval_tier();
  out.gamma = gamma;
  out.dbar.assign(h.num_layers(), 0.0);
  out.per_layer.resize(h.num_layers());

  std::size_t pool_total = 0;
  std::vector<const std::vector<Centroid>*> pools(h.num_layers(), nullptr);
  for (std::size_t l = 0; l < h.num_layers(); ++l) {
    if (!h.layer_active(l)) continue;
    pools[l] = out.tier == SearchTier::stm_only ? &h.layer(l).stm()
                                                : &h.layer(l).ltm();
    pool_total += pools[l]->size();
    out.dbar[l] = h.layer(l).dbar();
  }
  if (pool_total == 0)
    throw eval_error("compute_associations: no centroids in evaluation tier");

  const std::size_t nk = out.classes.size();
  // mass[l][centroid][class]
  std::vector<std::vector<std::vector<double>>> mass(h.num_layers());
  for (std::size_t l = 0; l < h.num_layers(); ++l)
    if (pools[l])
      mass[l].assign(pools[l]->size(), std::vector<double>(nk, 0.0));

  for (const Image& im : labeled.examples) {
    const auto it =
        std::lower_bound(out.classes.begin(), out.classes.end(), im.label);
    if (it == out.classes.end() || *it != im.label)
      throw eval_error("compute_associations: example label " +
                       std::to_string(im.label) + " not in class set");
    const std::size_t k = static_cast<std::size_t>(it - out.classes.begin());
    for (std::size_t l = 0; l < h.num_layers(); ++l) {
      if (!pools[l] || pools[l]->empty()) continue;
      const LayerMemory& mem = h.layer(l);
      const LayerConfig& c = mem.config();
      std::vector<Patch> patch_list = extract_patches(im, c.rho, c.stride);
      for (Patch& p : patch_list) normalize_patch(p.values);
      PrefilterCache cache(mem, patch_list);  // frozen: pools must not move
      ScanHints hints(mem, patch_grid(im.width, c.rho, c.stride));
      for (const Patch& p : patch_list) {
        const NearestRef near = mem.nearest_bounded(
            p.values, out.tier, hints.bound(p.values), &cache);
        mass[l][near.index][k] += patch_affinity(near.distance, out.dbar[l]);
        hints.advance(near);
      }
    }
  }

  const double uniform = 1.0 / static_cast<double>(nk);
  for (std::size_t l = 0; l < h.num_layers(); ++l) {
    if (!pools[l]) continue;
    out.per_layer[l].resize(pools[l]->size());
    for (std::size_t i = 0; i < pools[l]->size(); ++i) {
      ClassAssociation& a = out.per_layer[l][i];
      double total = 0.0;
      for (double v : mass[l][i]) total += v;
      if (total > 0.0) {
        a.g.resize(nk);
        for (std::size_t k = 0; k < nk; ++k) a.g[k] = mass[l][i][k] / total;
        a.argmax_class = 0;
        for (std::size_t k = 1; k < nk; ++k)
          if (a.g[k] > a.g[a.argmax_class]) a.argmax_class = static_cast<int>(k);
        a.argmax_value = a.g[a.argmax_class];
        a.cin = a.argmax_value > uniform + gamma;
      } else {
        // No mass reached this centroid: uniform distribution, never CIN.
        a.g.assign(nk, uniform);
        a.argmax_class = 0;
        a.argmax_value = uniform;
        a.cin = false;
      }
    }
  }
  return out;
}

}  // namespace stam
