#pragma once

// Layer stack with increasing receptive fields. Processing order is fixed:
// images arrive one at a time, each active layer consumes the image's patches
// in row-major order. Each layer's scan runs through a per-image certified
// prefilter plus warm-start bounds from the left/upper neighbor patches; both
// are selection-equivalent to a plain full scan (layer.hpp, prefilter.hpp).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/image.hpp"
#include "stam/layer.hpp"
#include "stam/patch.hpp"
#include "stam/prefilter.hpp"
#include "stam/rng.hpp"

namespace stam {

struct AblationFlags {
  bool ltm_disabled = false;   // no consolidation; evaluation reads STM
  bool ltm_dynamic = false;    // LTM centroids keep learning (not frozen)
  std::vector<int> drop_layers;  // 1-based layer ids to disable
};

class Hierarchy {
 public:
  Hierarchy(std::vector<LayerConfig> cfgs, AblationFlags flags = {})
      : flags_(std::move(flags)) {
    if (cfgs.empty()) throw config_error("hierarchy: needs at least one layer");
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
      cfgs[i].validate();
      if (i > 0 && cfgs[i].rho <= cfgs[i - 1].rho)
        throw config_error("hierarchy: rho must be strictly increasing");
    }
    active_.assign(cfgs.size(), true);
    for (int id : flags_.drop_layers) {
      if (id < 1 || id > static_cast<int>(cfgs.size()))
        throw config_error("hierarchy: drop_layers id " + std::to_string(id) +
                           " out of range");
      active_[id - 1] = false;
    }
    bool any = false;
    for (bool a : active_) any = any || a;
    if (!any) throw config_error("hierarchy: all layers dropped");
    if (flags_.ltm_disabled && flags_.ltm_dynamic)
      throw config_error("hierarchy: ltm_disabled and ltm_dynamic conflict");
    for (auto& c : cfgs) layers_.emplace_back(c);
  }

  std::size_t num_layers() const { return layers_.size(); }
  const LayerMemory& layer(std::size_t i) const { return layers_[i]; }
  LayerMemory& layer(std::size_t i) { return layers_[i]; }
  bool layer_active(std::size_t i) const { return active_[i]; }
  const AblationFlags& flags() const { return flags_; }
  std::uint64_t images_processed() const { return images_; }
  bool initialized() const { return initialized_; }

  // Evaluation reads LTM; the no-LTM ablation flips it to STM.
  SearchTier eval_tier() const {
    return flags_.ltm_disabled ? SearchTier::stm_only : SearchTier::ltm_only;
  }

  // Number of leading images whose patches fill every active layer's STM.
  std::size_t init_prefix_length(std::span<const Image> images) const {
    std::vector<std::size_t> have(layers_.size(), 0);
    for (std::size_t n = 0; n < images.size(); ++n) {
      bool done = true;
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (!active_[l]) continue;
        const LayerConfig& c = layers_[l].config();
        if (images[n].height >= c.rho && images[n].width >= c.rho) {
          have[l] += static_cast<std::size_t>(
                         patch_grid(images[n].height, c.rho, c.stride)) *
                     patch_grid(images[n].width, c.rho, c.stride);
        }
        done = done && have[l] >= static_cast<std::size_t>(c.stm_capacity);
      }
      if (done) return n + 1;
    }
    throw data_error("init: not enough patches to fill every layer's STM");
  }

  // Fills each active layer's STM with Delta patches sampled uniformly
  // without replacement from all patches of the given images (normalized).
  void init_from_images(std::span<const Image> images, std::uint64_t seed) {
    if (initialized_) throw state_error("init: hierarchy already initialized");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (!active_[l]) continue;
      const LayerConfig& c = layers_[l].config();
      std::vector<std::vector<double>> all;
      for (const Image& im : images) {
        if (im.height < c.rho || im.width < c.rho)
          throw data_error("init: image smaller than rho");
        for (Patch& p : extract_patches(im, c.rho, c.stride)) {
          normalize_patch(p.values);
          all.push_back(std::move(p.values));
        }
      }
      if (all.size() < static_cast<std::size_t>(c.stm_capacity))
        throw data_error("init: layer " + std::to_string(l + 1) + " has " +
                         std::to_string(all.size()) + " patches, needs " +
                         std::to_string(c.stm_capacity));
      Rng rng(derive_seed(seed, "init-layer", l));
      std::vector<std::vector<double>> chosen;
      chosen.reserve(c.stm_capacity);
      for (std::size_t idx : rng.sample_indices(all.size(), c.stm_capacity))
        chosen.push_back(std::move(all[idx]));
      layers_[l].seed_stm(std::move(chosen));
    }
    initialized_ = true;
  }

  void process_image(const Image& im) {
    if (!initialized_) throw state_error("process_image: hierarchy not initialized");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (!active_[l]) continue;
      LayerMemory& mem = layers_[l];
      const LayerConfig& c = mem.config();
      std::vector<Patch> patches = extract_patches(im, c.rho, c.stride);
      for (Patch& p : patches) normalize_patch(p.values);
      PrefilterCache cache(mem, patches);  // tracks this layer's mutations
      ScanHints hints(mem, patch_grid(im.width, c.rho, c.stride));
      for (const Patch& p : patches) {
        NearestRef touched;
        mem.process_patch(p.values, flags_.ltm_disabled, flags_.ltm_dynamic,
                          hints.bound(p.values), &touched, &cache);
        hints.advance(touched);
      }
    }
    ++images_;
  }

  // Pixel footprint: sum over active layers of rho^2 * (|LTM| + Delta).
  // STM counts at capacity (it is preallocated storage); dropped layers
  // reserve nothing.
  std::uint64_t memory_footprint() const {
    std::uint64_t total = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (!active_[l]) continue;
      const LayerConfig& c = layers_[l].config();
      total += static_cast<std::uint64_t>(c.rho) * c.rho *
               (layers_[l].ltm().size() +
                static_cast<std::uint64_t>(c.stm_capacity));
    }
    return total;
  }

  // --- snapshot plumbing ---
  struct State {
    AblationFlags flags;
    std::vector<std::uint8_t> active;
    std::vector<LayerMemory::State> layers;
    std::uint64_t images = 0;
    bool initialized = false;
  };

  State to_state() const {
    State s;
    s.flags = flags_;
    s.active.assign(active_.begin(), active_.end());
    for (const auto& l : layers_) s.layers.push_back(l.to_state());
    s.images = images_;
    s.initialized = initialized_;
    return s;
  }

  static Hierarchy from_state(State s) {
    std::vector<LayerConfig> cfgs;
    for (const auto& l : s.layers) cfgs.push_back(l.cfg);
    Hierarchy h(std::move(cfgs), std::move(s.flags));
    h.layers_.clear();
    for (auto& l : s.layers) h.layers_.push_back(LayerMemory::from_state(std::move(l)));
    h.active_.assign(s.active.begin(), s.active.end());
    h.images_ = s.images;
    h.initialized_ = s.initialized;
    return h;
  }

 private:
  std::vector<LayerMemory> layers_;
  std::vector<bool> active_;
  AblationFlags flags_;
  std::uint64_t images_ = 0;
  bool initialized_ = false;
};

}  // namespace stam
