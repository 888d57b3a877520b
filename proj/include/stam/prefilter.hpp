#pragma once

// Error-certified scan prefilter. For squared-Euclidean scans the identity
//   |p - c|^2 = |p|^2 + |c|^2 - 2<p, c>
// lets one image-level float matrix product estimate every patch/centroid
// distance at once. The estimate b satisfies |b - d| <= eps, with eps derived
// from standard dot-product rounding bounds on the actual data magnitudes, so
// any candidate whose b lies beyond the provisional minimum + 2*eps provably
// loses to the true winner and is skipped without touching its values.
// Survivors (almost always exactly one) are re-evaluated with the exact scan
// comparator, so selections, tie-breaks, and reported distances are
// bit-identical to a full scan. Manhattan metric and non-finite inputs fall
// back to full candidate lists.
//
// The cache is built per (image, layer). Two modes:
//  - mutable mode (training): the cache registers as the layer's scan cache;
//    centroids updated/created/erased after the build are tracked and always
//    handed to the exact scan instead of trusting stale estimates.
//  - frozen mode (evaluation): no registration; the cache refuses to serve
//    (throws) if the layer's mutation epoch moved since the build.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "stam/errors.hpp"
#include "stam/layer.hpp"
#include "stam/patch.hpp"

namespace stam {

namespace prefilter_detail {

using MatF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// gamma_n for float accumulation: n*u/(1-n*u), u = 2^-24.
inline double gamma32(double n) {
  const double u = 5.9604644775390625e-8;
  return n * u / (1.0 - n * u);
}

// Plain-summation squared norm (accuracy only; never compared bit-wise).
inline double plain_sqnorm(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i] * v[i];
  return s;
}

}  // namespace prefilter_detail

// Row layout of the cached dot products; pick the axis that will be scanned.
enum class PrefilterAxis : std::uint8_t {
  by_patch,     // candidates(): per-patch shortlists (training, classify)
  by_centroid,  // patch_window(): per-centroid shortlists (embedding)
};

class PrefilterCache final : public ScanCache {
 public:
  // Frozen (evaluation) cache: valid while the layer is not mutated.
  PrefilterCache(const LayerMemory& mem, std::span<const Patch> patches,
                 PrefilterAxis axis = PrefilterAxis::by_patch)
      : mem_(mem), axis_(axis) {
    build(patches);
  }

  // Mutable (training) cache: tracks the layer's mutations via callbacks.
  PrefilterCache(LayerMemory& mem, std::span<const Patch> patches)
      : mem_(mem), owner_(&mem), axis_(PrefilterAxis::by_patch) {
    build(patches);
    owner_->attach_scan_cache(this);
  }

  ~PrefilterCache() override {
    if (owner_) owner_->detach_scan_cache(this);
  }

  PrefilterCache(const PrefilterCache&) = delete;
  PrefilterCache& operator=(const PrefilterCache&) = delete;

  bool active() const { return active_; }

  // --- mutation callbacks (mutable mode) ---
  void on_update(Tier t, std::size_t index) override {
    Pool& p = pool(t);
    if (t == Tier::stm) {
      const std::int32_t row =
          index < stm_row_of_.size() ? stm_row_of_[index] : -1;
      if (row >= 0) p.dirty[static_cast<std::size_t>(row)] = 1;
    } else if (index < p.n0) {
      p.dirty[index] = 1;
    }
  }
  void on_append(Tier t) override {
    if (t == Tier::stm) stm_row_of_.push_back(-1);
  }
  void on_erase_stm(std::size_t index) override {
    stm_row_of_.erase(stm_row_of_.begin() +
                      static_cast<std::ptrdiff_t>(index));
  }

  // Candidate shortlist for the next patch in build order. `patch` must be
  // the same buffer that was handed to the constructor (identity-checked).
  // Returned spans live until the next candidates() call. Excluded indexes
  // are certified to lose strictly against the exact winner, so evaluating
  // only the shortlist (LTM first, each ascending) reproduces the full scan.
  CandidateLists candidates(std::span<const double> patch, SearchTier tier,
                            double hint_cmp) override {
    check_fresh();
    if (axis_ != PrefilterAxis::by_patch)
      throw state_error("prefilter: cache is centroid-major");
    if (cursor_ >= patch_ptrs_.size() || patch.data() != patch_ptrs_[cursor_])
      cursor_ = 0;  // a fresh pass over the same patches restarts the cursor
    if (cursor_ >= patch_ptrs_.size() || patch.data() != patch_ptrs_[cursor_])
      throw state_error("prefilter: patch does not match the cached image");
    const std::size_t k = cursor_++;

    const bool use_ltm = tier != SearchTier::stm_only;
    const bool use_stm = tier != SearchTier::ltm_only;
    ltm_list_.clear();
    stm_list_.clear();
    if (!active_ || !std::isfinite(p2_[k])) {
      full_lists(use_ltm, use_stm);
      return {ltm_list_, stm_list_};
    }
    double bmin = metric_detail::kInf;
    if (use_ltm) bmin = std::min(bmin, clean_min(ltm_, k));
    if (use_stm) bmin = std::min(bmin, clean_min(stm_, k));
    const double cut = std::min(bmin + 2.0 * eps_, hint_cmp + eps_);
    if (use_ltm) collect_ltm(k, cut);
    if (use_stm) collect_stm(k, cut);
    return {ltm_list_, stm_list_};
  }

  // Patch shortlist for one frozen-pool centroid: every patch whose exact
  // distance could be the minimum (the embedding scan resolves them exactly).
  std::span<const std::uint32_t> patch_window(Tier t, std::size_t row) {
    check_fresh();
    if (axis_ != PrefilterAxis::by_centroid)
      throw state_error("prefilter: cache is patch-major");
    const Pool& p = pool(t);
    win_list_.clear();
    const std::size_t np = patch_ptrs_.size();
    if (!active_ || row >= p.n0 || !std::isfinite(p.sqn.empty() ? 0.0 : p.sqn[row])) {
      for (std::size_t k = 0; k < np; ++k)
        win_list_.push_back(static_cast<std::uint32_t>(k));
      return win_list_;
    }
    const float* srow = p.s.data() + row * np;
    const double n2 = p.sqn[row];
    double bmin = metric_detail::kInf;
    for (std::size_t k = 0; k < np; ++k) {
      const double b = p2_[k] + n2 - 2.0 * static_cast<double>(srow[k]);
      if (b < bmin) bmin = b;
    }
    const double cut = bmin + 2.0 * eps_;
    for (std::size_t k = 0; k < np; ++k) {
      const double b = p2_[k] + n2 - 2.0 * static_cast<double>(srow[k]);
      if (!std::isfinite(p2_[k]) || b <= cut)
        win_list_.push_back(static_cast<std::uint32_t>(k));
    }
    return win_list_;
  }

 private:
  struct Pool {
    // by_patch: n_patches x n0 (row per patch); by_centroid: n0 x n_patches.
    prefilter_detail::MatF s;
    std::vector<double> sqn;          // build-time squared norms (plain sums)
    std::vector<std::uint8_t> dirty;  // mutated since build, by cached row
    std::size_t n0 = 0;               // pool size at build time
  };

  Pool& pool(Tier t) { return t == Tier::ltm ? ltm_ : stm_; }

  void build(std::span<const Patch> patches) {
    const std::size_t dim = mem_.config().dim();
    const std::size_t np = patches.size();
    epoch_ = mem_.mutation_epoch();
    patch_ptrs_.resize(np);
    p2_.assign(np, 0.0);
    double scale = 0.0;  // max squared norm over everything cached
    bool finite = true;
    const bool euclid = mem_.config().metric == Metric::euclidean;

    prefilter_detail::MatF pmat;
    if (euclid && np > 0)
      pmat.resize(static_cast<Eigen::Index>(np),
                  static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < np; ++k) {
      const auto& v = patches[k].values;
      if (v.size() != dim) throw state_error("prefilter: wrong patch dimension");
      patch_ptrs_[k] = v.data();
      if (!euclid) continue;
      p2_[k] = prefilter_detail::plain_sqnorm(v.data(), dim);
      finite = finite && std::isfinite(p2_[k]);
      scale = std::max(scale, p2_[k]);
      for (std::size_t j = 0; j < dim; ++j)
        pmat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
            static_cast<float>(v[j]);
    }

    auto build_pool = [&](Tier t, Pool& p) {
      const std::span<const double> flat = mem_.pool_values(t);
      p.n0 = dim ? flat.size() / dim : 0;
      p.sqn.resize(p.n0);
      p.dirty.assign(p.n0, 0);
      if (!euclid || p.n0 == 0 || np == 0) return;
      prefilter_detail::MatF cmat(static_cast<Eigen::Index>(p.n0),
                                  static_cast<Eigen::Index>(dim));
      for (std::size_t i = 0; i < p.n0; ++i) {
        p.sqn[i] = prefilter_detail::plain_sqnorm(flat.data() + i * dim, dim);
        finite = finite && std::isfinite(p.sqn[i]);
        scale = std::max(scale, p.sqn[i]);
        for (std::size_t j = 0; j < dim; ++j)
          cmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              static_cast<float>(flat[i * dim + j]);
      }
      if (axis_ == PrefilterAxis::by_patch)
        p.s.noalias() = pmat * cmat.transpose();
      else
        p.s.noalias() = cmat * pmat.transpose();
    };
    build_pool(Tier::ltm, ltm_);
    build_pool(Tier::stm, stm_);

    stm_row_of_.resize(stm_.n0);
    for (std::size_t i = 0; i < stm_.n0; ++i)
      stm_row_of_[i] = static_cast<std::int32_t>(i);

    // |b - d| <= gamma_{dim+3} * (|p| + |c|)^2 covers the float conversions
    // and any accumulation order inside the product; x4 slack on top.
    const double reach = 2.0 * std::sqrt(scale);
    eps_ = 4.0 * prefilter_detail::gamma32(static_cast<double>(dim) + 3.0) *
           reach * reach;
    active_ = euclid && finite && std::isfinite(eps_) && np > 0;
    cursor_ = 0;
  }

  void check_fresh() const {
    if (!owner_ && mem_.mutation_epoch() != epoch_)
      throw state_error("prefilter: layer mutated under a frozen cache");
  }

  double clean_min(const Pool& p, std::size_t k) const {
    double bmin = metric_detail::kInf;
    if (p.n0 == 0) return bmin;
    const float* row = p.s.data() + k * p.n0;
    for (std::size_t i = 0; i < p.n0; ++i) {
      if (p.dirty[i]) continue;
      const double b = p2_[k] + p.sqn[i] - 2.0 * static_cast<double>(row[i]);
      if (b < bmin) bmin = b;
    }
    return bmin;
  }

  void collect_ltm(std::size_t k, double cut) {
    const float* row = ltm_.s.data() + k * ltm_.n0;
    for (std::size_t i = 0; i < ltm_.n0; ++i) {
      if (!ltm_.dirty[i]) {
        const double b =
            p2_[k] + ltm_.sqn[i] - 2.0 * static_cast<double>(row[i]);
        if (b > cut) continue;
      }
      ltm_list_.push_back(static_cast<std::uint32_t>(i));
    }
    const std::size_t n = mem_.ltm().size();
    for (std::size_t i = ltm_.n0; i < n; ++i)
      ltm_list_.push_back(static_cast<std::uint32_t>(i));
  }

  void collect_stm(std::size_t k, double cut) {
    const float* row = stm_.s.data() + k * stm_.n0;
    const std::size_t n = mem_.stm().size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t r = i < stm_row_of_.size() ? stm_row_of_[i] : -1;
      if (r >= 0 && !stm_.dirty[static_cast<std::size_t>(r)]) {
        const double b =
            p2_[k] + stm_.sqn[static_cast<std::size_t>(r)] -
            2.0 * static_cast<double>(row[static_cast<std::size_t>(r)]);
        if (b > cut) continue;
      }
      stm_list_.push_back(static_cast<std::uint32_t>(i));
    }
  }

  void full_lists(bool use_ltm, bool use_stm) {
    if (use_ltm)
      for (std::size_t i = 0; i < mem_.ltm().size(); ++i)
        ltm_list_.push_back(static_cast<std::uint32_t>(i));
    if (use_stm)
      for (std::size_t i = 0; i < mem_.stm().size(); ++i)
        stm_list_.push_back(static_cast<std::uint32_t>(i));
  }

  const LayerMemory& mem_;
  LayerMemory* owner_ = nullptr;  // set in mutable mode only
  PrefilterAxis axis_;
  Pool ltm_, stm_;
  std::vector<std::int32_t> stm_row_of_;  // current STM index -> cached row
  std::vector<const double*> patch_ptrs_;
  std::vector<double> p2_;
  std::vector<std::uint32_t> ltm_list_, stm_list_, win_list_;
  double eps_ = 0.0;
  std::uint64_t epoch_ = 0;
  std::size_t cursor_ = 0;
  bool active_ = false;
};

}  // namespace stam
