#pragma once

// Per-layer centroid memory: online nearest-centroid clustering with novelty
// detection, a bounded plastic STM (LRU eviction) and an append-only frozen
// LTM. This is the stateful heart of the learner; everything here is
// deterministic and single-threaded by design.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stam/errors.hpp"

namespace stam {

enum class Tier : std::uint8_t { stm = 0, ltm = 1 };
enum class Metric : std::uint8_t { euclidean = 0, manhattan = 1 };
enum class SearchTier : std::uint8_t { stm_and_ltm, ltm_only, stm_only };

struct LayerConfig {
  int rho = 0;               // patch side; centroid dimension is rho*rho
  int stm_capacity = 0;      // Delta
  double alpha = 0.1;        // centroid learning rate
  double theta = 30.0;       // selections before consolidation (inf = never)
  double beta = 0.95;        // novelty percentile
  int stride = 1;
  Metric metric = Metric::euclidean;
  int novelty_window = 2000;  // ring of recent nearest distances
  int novelty_warmup = 100;   // samples required before novelty can fire

  void validate() const {
    if (rho < 1) throw config_error("layer: rho must be >= 1");
    if (stm_capacity < 1) throw config_error("layer: stm_capacity must be >= 1");
    if (!(alpha > 0.0) || !(alpha <= 1.0))
      throw config_error("layer: alpha must be in (0, 1]");
    if (!(theta > 0.0)) throw config_error("layer: theta must be positive");
    if (!(beta > 0.0) || !(beta <= 1.0))
      throw config_error("layer: beta must be in (0, 1]");
    if (stride < 1) throw config_error("layer: stride must be >= 1");
    if (novelty_window < 1) throw config_error("layer: novelty_window must be >= 1");
    if (novelty_warmup < 1) throw config_error("layer: novelty_warmup must be >= 1");
  }

  std::size_t dim() const { return static_cast<std::size_t>(rho) * rho; }
};

struct Centroid {
  std::vector<double> values;
  std::uint64_t select_count = 0;
  std::uint64_t last_selected = 0;
};

struct NearestRef {
  Tier tier = Tier::stm;
  std::size_t index = 0;
  double distance = 0.0;  // metric distance (sqrt'ed for L2)
};

enum class PatchEvent : std::uint8_t {
  stm_updated,
  consolidated,
  novelty,
  ltm_selected,
};

// Candidate shortlists for one nearest-centroid scan, ascending indexes into
// the current pools. Contract: every pool member not listed would lose
// STRICTLY (never tie) against the best listed candidate, so scanning only
// the lists reproduces the full scan's selection and tie-breaks exactly.
struct CandidateLists {
  std::span<const std::uint32_t> ltm;
  std::span<const std::uint32_t> stm;
};

// A scan accelerator a LayerMemory can consult instead of walking whole
// pools. Implementations hear about every mutation so their shortlists stay
// sound while training runs under them.
class ScanCache {
 public:
  virtual ~ScanCache() = default;
  virtual void on_update(Tier t, std::size_t index) = 0;
  virtual void on_append(Tier t) = 0;
  virtual void on_erase_stm(std::size_t index) = 0;
  virtual CandidateLists candidates(std::span<const double> patch,
                                    SearchTier tier, double hint_cmp) = 0;
};

namespace metric_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// All distance comparisons reduce with this exact operation order (four
// accumulators, lanes i % 4, combined pairwise). The pruned scan below probes
// the same accumulators mid-flight; since every term is nonnegative and fp
// addition of nonnegative terms is monotone, a probe is a lower bound of the
// final value, so pruning can never change which candidate wins.
struct Acc4 {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  double combined() const { return (s0 + s1) + (s2 + s3); }
};

// Comparable value: squared distance for L2, plain sum for L1. Pruned
// variants return +inf as soon as the probe shows the candidate cannot win:
//   probe >  prune_gt  (hint bound: an exact tie with the hint must survive)
//   probe >= prune_ge  (current best: a tie loses to the earlier index anyway)
template <bool kManhattan>
inline double cmp_value_pruned(const double* a, const double* b, std::size_t n,
                               double prune_gt, double prune_ge) {
  Acc4 acc;
  std::size_t i = 0;
  while (i + 32 <= n) {
    const std::size_t end = i + 32;
    for (; i < end; i += 4) {
      if constexpr (kManhattan) {
        acc.s0 += std::fabs(a[i] - b[i]);
        acc.s1 += std::fabs(a[i + 1] - b[i + 1]);
        acc.s2 += std::fabs(a[i + 2] - b[i + 2]);
        acc.s3 += std::fabs(a[i + 3] - b[i + 3]);
      } else {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        const double d3 = a[i + 3] - b[i + 3];
        acc.s0 += d0 * d0;
        acc.s1 += d1 * d1;
        acc.s2 += d2 * d2;
        acc.s3 += d3 * d3;
      }
    }
    const double probe = acc.combined();
    if (probe > prune_gt || probe >= prune_ge) return kInf;
  }
  for (; i + 4 <= n; i += 4) {
    if constexpr (kManhattan) {
      acc.s0 += std::fabs(a[i] - b[i]);
      acc.s1 += std::fabs(a[i + 1] - b[i + 1]);
      acc.s2 += std::fabs(a[i + 2] - b[i + 2]);
      acc.s3 += std::fabs(a[i + 3] - b[i + 3]);
    } else {
      const double d0 = a[i] - b[i];
      const double d1 = a[i + 1] - b[i + 1];
      const double d2 = a[i + 2] - b[i + 2];
      const double d3 = a[i + 3] - b[i + 3];
      acc.s0 += d0 * d0;
      acc.s1 += d1 * d1;
      acc.s2 += d2 * d2;
      acc.s3 += d3 * d3;
    }
  }
  for (; i < n; ++i) {
    if constexpr (kManhattan) {
      acc.s0 += std::fabs(a[i] - b[i]);
    } else {
      const double d = a[i] - b[i];
      acc.s0 += d * d;
    }
  }
  const double v = acc.combined();
  if (v > prune_gt || v >= prune_ge) return kInf;
  return v;
}

inline double cmp_value(const double* a, const double* b, std::size_t n,
                        Metric m) {
  return m == Metric::manhattan
             ? cmp_value_pruned<true>(a, b, n, kInf, kInf)
             : cmp_value_pruned<false>(a, b, n, kInf, kInf);
}

inline double cmp_to_distance(double cmp, Metric m) {
  return m == Metric::euclidean ? std::sqrt(cmp) : cmp;
}

}  // namespace metric_detail

// Metric distance between equal-length vectors (L2 or L1).
inline double metric_distance(std::span<const double> a,
                              std::span<const double> b, Metric m) {
  if (a.size() != b.size())
    throw state_error("metric_distance: dimension mismatch");
  return metric_detail::cmp_to_distance(
      metric_detail::cmp_value(a.data(), b.data(), a.size(), m), m);
}

class LayerMemory {
 public:
  explicit LayerMemory(const LayerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  const LayerConfig& config() const { return cfg_; }
  const std::vector<Centroid>& stm() const { return stm_; }
  const std::vector<Centroid>& ltm() const { return ltm_; }
  std::uint64_t event_clock() const { return clock_; }
  bool initialized() const { return !stm_.empty() || !ltm_.empty(); }

  // Bumped on every centroid mutation (update / create / erase / consolidate);
  // lets detached caches detect that their view of the pools went stale.
  std::uint64_t mutation_epoch() const { return mutation_epoch_; }

  void attach_scan_cache(ScanCache* cache) {
    if (scan_cache_ && cache)
      throw state_error("attach_scan_cache: a cache is already attached");
    scan_cache_ = cache;
  }
  void detach_scan_cache(ScanCache* cache) {
    if (scan_cache_ == cache) scan_cache_ = nullptr;
  }

  // Running mean of nearest-centroid distances over everything processed so
  // far (evaluation snapshots this value once at eval start).
  double dbar() const { return dist_count_ ? dist_sum_ / dist_count_ : 0.0; }
  std::uint64_t distance_count() const { return dist_count_; }

  // Recent-distance ring, oldest first (novelty percentile source).
  std::vector<double> novelty_ring() const {
    std::vector<double> out;
    out.reserve(ring_.size());
    for (std::size_t i = 0; i < ring_.size(); ++i)
      out.push_back(ring_[(ring_head_ + i) % ring_.size()]);
    return out;
  }

  // One-time STM fill from pre-normalized patch values.
  void seed_stm(std::vector<std::vector<double>> values) {
    if (initialized()) throw state_error("seed_stm: layer already initialized");
    if (values.size() != static_cast<std::size_t>(cfg_.stm_capacity))
      throw state_error("seed_stm: need exactly stm_capacity patches");
    for (auto& v : values) {
      if (v.size() != cfg_.dim())
        throw state_error("seed_stm: wrong patch dimension");
      stm_flat_.insert(stm_flat_.end(), v.begin(), v.end());
      Centroid c;
      c.values = std::move(v);
      stm_.push_back(std::move(c));
      note_append(Tier::stm);
    }
  }

  // beta-percentile (nearest-rank: sorted value at ceil(beta*n), 1-based) of
  // the ring; +inf until novelty_warmup samples have been seen.
  double novelty_threshold() const {
    const std::size_t n = sorted_.size();
    if (n < static_cast<std::size_t>(cfg_.novelty_warmup))
      return metric_detail::kInf;
    std::size_t k = static_cast<std::size_t>(
        std::ceil(cfg_.beta * static_cast<double>(n)));
    if (k < 1) k = 1;
    if (k > n) k = n;
    return sorted_[k - 1];
  }

  NearestRef nearest(std::span<const double> patch, SearchTier tier) const {
    return nearest_bounded(patch, tier, metric_detail::kInf);
  }

  // Contiguous mirror of a pool's centroid values (centroid i occupies
  // [i*dim, (i+1)*dim)); scans stream this instead of chasing per-centroid
  // allocations. Kept in exact sync with Centroid::values on every mutation.
  std::span<const double> pool_values(Tier t) const {
    return t == Tier::ltm ? ltm_flat_ : stm_flat_;
  }

  // Same selection as nearest(); `hint_cmp` is an upper bound on the best
  // comparable value (e.g. an exact distance to some pool member) used only
  // to prune. A stale too-tight hint triggers an exact full rescan.
  NearestRef nearest_bounded(std::span<const double> patch, SearchTier tier,
                             double hint_cmp) const {
    if (patch.size() != cfg_.dim())
      throw state_error("nearest: wrong patch dimension");
    const bool scan_ltm = tier != SearchTier::stm_only;
    const bool scan_stm = tier != SearchTier::ltm_only;
    if ((!scan_ltm || ltm_.empty()) && (!scan_stm || stm_.empty()))
      throw state_error("nearest: empty centroid pool");
    double best = metric_detail::kInf;
    bool found = false;
    NearestRef ref;
    const std::size_t dim = cfg_.dim();
    auto scan = [&](const std::vector<Centroid>& pool,
                    const std::vector<double>& flat, Tier t) {
      const double* base = flat.data();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double v =
            cfg_.metric == Metric::manhattan
                ? metric_detail::cmp_value_pruned<true>(
                      patch.data(), base + i * dim, dim, hint_cmp, best)
                : metric_detail::cmp_value_pruned<false>(
                      patch.data(), base + i * dim, dim, hint_cmp, best);
        if (v < best) {
          best = v;
          found = true;
          ref.tier = t;
          ref.index = i;
        }
      }
    };
    // LTM is ordered before STM in the union, so ties resolve LTM-first.
    if (scan_ltm) scan(ltm_, ltm_flat_, Tier::ltm);
    if (scan_stm) scan(stm_, stm_flat_, Tier::stm);
    if (!found) return nearest_bounded(patch, tier, metric_detail::kInf);
    ref.distance = metric_detail::cmp_to_distance(best, cfg_.metric);
    return ref;
  }

  // Cache-assisted variant: evaluates only the cache's shortlists with the
  // same comparator, order, and pruning bounds, so the result (winner, tie
  // resolution, reported distance) is identical to the full scan above.
  NearestRef nearest_bounded(std::span<const double> patch, SearchTier tier,
                             double hint_cmp, ScanCache* cache) const {
    if (!cache) return nearest_bounded(patch, tier, hint_cmp);
    if (patch.size() != cfg_.dim())
      throw state_error("nearest: wrong patch dimension");
    const bool scan_ltm = tier != SearchTier::stm_only;
    const bool scan_stm = tier != SearchTier::ltm_only;
    if ((!scan_ltm || ltm_.empty()) && (!scan_stm || stm_.empty()))
      throw state_error("nearest: empty centroid pool");
    const CandidateLists lists = cache->candidates(patch, tier, hint_cmp);
    double best = metric_detail::kInf;
    bool found = false;
    NearestRef ref;
    const std::size_t dim = cfg_.dim();
    auto scan = [&](std::span<const std::uint32_t> idxs,
                    const std::vector<double>& flat, Tier t) {
      const double* base = flat.data();
      for (const std::uint32_t i : idxs) {
        const double* c = base + static_cast<std::size_t>(i) * dim;
        const double v = cfg_.metric == Metric::manhattan
                             ? metric_detail::cmp_value_pruned<true>(
                                   patch.data(), c, dim, hint_cmp, best)
                             : metric_detail::cmp_value_pruned<false>(
                                   patch.data(), c, dim, hint_cmp, best);
        if (v < best) {
          best = v;
          found = true;
          ref.tier = t;
          ref.index = i;
        }
      }
    };
    if (scan_ltm) scan(lists.ltm, ltm_flat_, Tier::ltm);
    if (scan_stm) scan(lists.stm, stm_flat_, Tier::stm);
    if (!found) return nearest_bounded(patch, tier, metric_detail::kInf);
    ref.distance = metric_detail::cmp_to_distance(best, cfg_.metric);
    return ref;
  }

  const Centroid& centroid(Tier t, std::size_t i) const {
    const auto& pool = t == Tier::ltm ? ltm_ : stm_;
    if (i >= pool.size()) throw state_error("centroid: index out of range");
    return pool[i];
  }

  // Convex pull toward the patch. Frozen LTM rejects updates unless the
  // dynamic-LTM ablation explicitly allows them.
  void update_centroid(Tier tier, std::size_t index,
                       std::span<const double> patch,
                       bool allow_frozen = false) {
    if (tier == Tier::ltm && !allow_frozen)
      throw state_error("update_centroid: LTM centroids are frozen");
    const auto& pool = tier == Tier::ltm ? ltm_ : stm_;
    if (index >= pool.size())
      throw state_error("update_centroid: index out of range");
    apply_update(tier, index, patch);
  }

  // One online event. Order: nearest over STM u LTM, record the distance,
  // novelty check against the updated window, then either create / update /
  // consolidate / refresh. Returns what happened plus the touched centroid.
  PatchEvent process_patch(std::span<const double> patch, bool ltm_disabled,
                           bool ltm_dynamic,
                           double hint_cmp = metric_detail::kInf,
                           NearestRef* touched = nullptr,
                           ScanCache* cache = nullptr) {
    if (!initialized()) throw state_error("process_patch: layer not initialized");
    ++clock_;
    const NearestRef near =
        nearest_bounded(patch, SearchTier::stm_and_ltm, hint_cmp, cache);
    push_distance(near.distance);
    PatchEvent ev;
    NearestRef out = near;
    if (near.distance > novelty_threshold()) {
      if (stm_.size() >= static_cast<std::size_t>(cfg_.stm_capacity))
        evict_lru();
      Centroid c;
      c.values.assign(patch.begin(), patch.end());
      c.select_count = 0;
      c.last_selected = clock_;
      stm_flat_.insert(stm_flat_.end(), patch.begin(), patch.end());
      stm_.push_back(std::move(c));
      note_append(Tier::stm);
      out = {Tier::stm, stm_.size() - 1, near.distance};
      ev = PatchEvent::novelty;
    } else if (near.tier == Tier::stm) {
      apply_update(Tier::stm, near.index, patch);
      if (!ltm_disabled &&
          static_cast<double>(stm_[near.index].select_count) >= cfg_.theta) {
        const auto& vals = stm_[near.index].values;
        ltm_flat_.insert(ltm_flat_.end(), vals.begin(), vals.end());
        ltm_.push_back(std::move(stm_[near.index]));
        note_append(Tier::ltm);
        erase_stm(near.index);
        out = {Tier::ltm, ltm_.size() - 1, near.distance};
        ev = PatchEvent::consolidated;
      } else {
        ev = PatchEvent::stm_updated;
      }
    } else {
      ltm_[near.index].last_selected = clock_;
      if (ltm_dynamic) apply_update(Tier::ltm, near.index, patch);
      ev = PatchEvent::ltm_selected;
    }
    if (touched) *touched = out;
    return ev;
  }

  // --- snapshot plumbing (see snapshot.hpp) ---
  struct State {
    LayerConfig cfg;
    std::vector<Centroid> stm, ltm;
    std::vector<double> ring;  // oldest first
    double dist_sum = 0.0;
    std::uint64_t dist_count = 0;
    std::uint64_t clock = 0;
  };

  State to_state() const {
    return State{cfg_, stm_, ltm_, novelty_ring(), dist_sum_, dist_count_,
                 clock_};
  }

  static LayerMemory from_state(State s) {
    LayerMemory m(s.cfg);
    m.stm_ = std::move(s.stm);
    m.ltm_ = std::move(s.ltm);
    for (const Centroid& c : m.stm_) {
      if (c.values.size() != m.cfg_.dim())
        throw state_error("from_state: wrong centroid dimension");
      m.stm_flat_.insert(m.stm_flat_.end(), c.values.begin(), c.values.end());
    }
    for (const Centroid& c : m.ltm_) {
      if (c.values.size() != m.cfg_.dim())
        throw state_error("from_state: wrong centroid dimension");
      m.ltm_flat_.insert(m.ltm_flat_.end(), c.values.begin(), c.values.end());
    }
    m.ring_ = std::move(s.ring);
    m.ring_head_ = 0;
    m.sorted_ = m.ring_;
    std::sort(m.sorted_.begin(), m.sorted_.end());
    m.dist_sum_ = s.dist_sum;
    m.dist_count_ = s.dist_count;
    m.clock_ = s.clock;
    return m;
  }

 private:
  void note_append(Tier t) {
    ++mutation_epoch_;
    if (scan_cache_) scan_cache_->on_append(t);
  }

  void apply_update(Tier t, std::size_t index, std::span<const double> patch) {
    Centroid& c = t == Tier::ltm ? ltm_[index] : stm_[index];
    double* f = (t == Tier::ltm ? ltm_flat_ : stm_flat_).data() +
                index * cfg_.dim();
    const double a = cfg_.alpha;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      c.values[i] = a * patch[i] + (1.0 - a) * c.values[i];
      f[i] = c.values[i];
    }
    ++c.select_count;
    c.last_selected = clock_;
    ++mutation_epoch_;
    if (scan_cache_) scan_cache_->on_update(t, index);
  }

  void erase_stm(std::size_t index) {
    stm_.erase(stm_.begin() + static_cast<std::ptrdiff_t>(index));
    const auto it = stm_flat_.begin() +
                    static_cast<std::ptrdiff_t>(index * cfg_.dim());
    stm_flat_.erase(it, it + static_cast<std::ptrdiff_t>(cfg_.dim()));
    ++mutation_epoch_;
    if (scan_cache_) scan_cache_->on_erase_stm(index);
  }

  void evict_lru() {
    // Least recently selected; ties break toward the lowest index.
    std::size_t victim = 0;
    for (std::size_t i = 1; i < stm_.size(); ++i)
      if (stm_[i].last_selected < stm_[victim].last_selected) victim = i;
    erase_stm(victim);
  }

  // Ring + sorted mirror: the sorted array is the exact multiset of the ring,
  // so the percentile matches an offline sort of the window bit-for-bit.
  void push_distance(double d) {
    dist_sum_ += d;
    ++dist_count_;
    if (ring_.size() == static_cast<std::size_t>(cfg_.novelty_window)) {
      const double old = ring_[ring_head_];
      auto it = std::lower_bound(sorted_.begin(), sorted_.end(), old);
      sorted_.erase(it);
      ring_[ring_head_] = d;
      ring_head_ = (ring_head_ + 1) % ring_.size();
    } else {
      ring_.push_back(d);
    }
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), d), d);
  }

  LayerConfig cfg_;
  std::vector<Centroid> stm_, ltm_;
  std::vector<double> stm_flat_, ltm_flat_;  // mirrors, see pool_values()
  std::vector<double> ring_;
  std::size_t ring_head_ = 0;
  std::vector<double> sorted_;
  double dist_sum_ = 0.0;
  std::uint64_t dist_count_ = 0;
  std::uint64_t clock_ = 0;
  std::uint64_t mutation_epoch_ = 0;
  ScanCache* scan_cache_ = nullptr;  // not owned; never copied with state
};

// Warm-start bound for row-major patch scans: the exact distances to the
// centroids the left and upper neighbor patches selected (both overlap the
// current patch heavily, so they tend to be tight). Purely a pruning bound;
// nearest-centroid selection stays exact. Stale references (the pool shrank
// since the neighbor was processed) are skipped.
class ScanHints {
 public:
  ScanHints(const LayerMemory& mem, int cols)
      : mem_(mem), above_(static_cast<std::size_t>(cols)) {}

  double bound(std::span<const double> patch) const {
    double h = metric_detail::kInf;
    if (prev_) h = exact_cmp(patch, *prev_);
    const auto& up = above_[col_];
    if (up && !(prev_ && prev_->tier == up->tier && prev_->index == up->index))
      h = std::min(h, exact_cmp(patch, *up));
    return h;
  }

  void advance(const NearestRef& winner) {
    above_[col_] = winner;
    prev_ = winner;
    col_ = col_ + 1 == above_.size() ? 0 : col_ + 1;
  }

 private:
  double exact_cmp(std::span<const double> patch, const NearestRef& r) const {
    const std::size_t n =
        r.tier == Tier::ltm ? mem_.ltm().size() : mem_.stm().size();
    if (r.index >= n) return metric_detail::kInf;
    const std::size_t dim = mem_.config().dim();
    return metric_detail::cmp_value(
        patch.data(), mem_.pool_values(r.tier).data() + r.index * dim, dim,
        mem_.config().metric);
  }

  const LayerMemory& mem_;
  std::vector<std::optional<NearestRef>> above_;
  std::optional<NearestRef> prev_;
  std::size_t col_ = 0;
};

}  // namespace stam
