#pragma once

// Patch-vote classification. Each patch's nearest evaluation-tier centroid
// votes its argmax class with weight max_k g(k) if it is CIN, else nothing;
// a layer's vote is the mean over all its patches; layer votes sum into the
// final score. All-zero scores abstain (reported as the lowest class).

#include <optional>
#include <vector>

#include "stam/associations.hpp"
#include "stam/errors.hpp"
#include "stam/hierarchy.hpp"

namespace stam {

struct ClassifyResult {
  int class_id = -1;              // predicted class (ascending-tie argmax)
  std::vector<double> votes;      // summed layer votes, aligned with classes
  bool abstained = false;
};

inline ClassifyResult classify(const Hierarchy& h, const Associations& assoc,
                               const Image& im) {
  if (assoc.classes.empty()) throw eval_error("classify: empty class set");
  if (assoc.per_layer.size() != h.num_layers())
    throw eval_error("classify: associations do not match hierarchy");
  ClassifyResult out;
  out.votes.assign(assoc.classes.size(), 0.0);
  for (std::size_t l = 0; l < h.num_layers(); ++l) {
    if (!h.layer_active(l) || assoc.per_layer[l].empty()) continue;
    const LayerMemory& mem = h.layer(l);
    const LayerConfig& c = mem.config();
    std::vector<double> layer_votes(assoc.classes.size(), 0.0);
    std::vector<Patch> patch_list = extract_patches(im, c.rho, c.stride);
    for (Patch& p : patch_list) normalize_patch(p.values);
    PrefilterCache cache(mem, patch_list);  // frozen: pools must not move
    std::size_t patches = 0;
    ScanHints hints(mem, patch_grid(im.width, c.rho, c.stride));
    for (const Patch& p : patch_list) {
      const NearestRef near = mem.nearest_bounded(
          p.values, assoc.tier, hints.bound(p.values), &cache);
      const ClassAssociation& a = assoc.per_layer[l][near.index];
      if (a.cin) layer_votes[a.argmax_class] += a.argmax_value;
      ++patches;
      hints.advance(near);
    }
    // Mean over all patches, including the non-voting ones.
    for (std::size_t k = 0; k < layer_votes.size(); ++k)
      out.votes[k] += layer_votes[k] / static_cast<double>(patches);
  }
  std::size_t best = 0;
  bool any = false;
  for (std::size_t k = 0; k < out.votes.size(); ++k) {
    if (out.votes[k] > 0.0) any = true;
    if (out.votes[k] > out.votes[best]) best = k;  // ties keep lowest index
  }
  out.abstained = !any;
  out.class_id = assoc.classes[out.abstained ? 0 : best];
  return out;
}

}  // namespace stam
