#pragma once

// Stream construction for the progressive-learning protocol: ordered phases of
// two (or more) classes each, or a uniform stream over the whole class set.
// Labels ride along on the images but are only read by evaluation code.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/image.hpp"
#include "stam/rng.hpp"

namespace stam {

enum class StreamMode { incremental, uniform };

struct StreamSpec {
  StreamMode mode = StreamMode::incremental;
  // Class ids per phase. Uniform mode draws every phase from the union but
  // keeps the same phase boundaries (evaluation checkpoints).
  std::vector<std::vector<int>> phases;
  int examples_per_phase = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (phases.empty()) throw config_error("stream: no phases defined");
    if (examples_per_phase <= 0)
      throw config_error("stream: examples_per_phase must be positive");
    std::set<int> seen;
    for (const auto& ph : phases) {
      if (ph.empty()) throw config_error("stream: empty phase class set");
      for (int c : ph) {
        if (c < 0) throw config_error("stream: negative class id");
        if (mode == StreamMode::incremental && !seen.insert(c).second)
          throw config_error("stream: class " + std::to_string(c) +
                             " appears in more than one phase");
      }
    }
  }

  // Union of all phase class sets, ascending.
  std::vector<int> class_universe() const {
    std::set<int> s;
    for (const auto& ph : phases)
      for (int c : ph) s.insert(c);
    return {s.begin(), s.end()};
  }

  // Classes visible to evaluation after `phase` (0-based) completes.
  std::vector<int> classes_seen(std::size_t phase) const {
    if (mode == StreamMode::uniform) return class_universe();
    std::set<int> s;
    for (std::size_t p = 0; p <= phase && p < phases.size(); ++p)
      for (int c : phases[p]) s.insert(c);
    return {s.begin(), s.end()};
  }
};

struct LabeledSet {
  std::vector<Image> examples;  // labels attached
  std::vector<int> classes;     // ascending
};

namespace stream_detail {

inline std::map<int, std::vector<std::size_t>> index_by_class(
    const std::vector<Image>& dataset) {
  std::map<int, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by[dataset[i].label].push_back(i);
  return by;
}

// N draws from the pooled examples of `classes`: without replacement when the
// pool is big enough, with replacement otherwise (keeps the quota exact).
inline std::vector<std::size_t> draw_pooled(
    const std::map<int, std::vector<std::size_t>>& by,
    const std::vector<int>& classes, int n, Rng& rng) {
  std::vector<std::size_t> pool;
  for (int c : classes) {
    auto it = by.find(c);
    if (it == by.end() || it->second.empty())
      throw config_error("stream: class " + std::to_string(c) +
                         " absent from dataset");
    pool.insert(pool.end(), it->second.begin(), it->second.end());
  }
  std::vector<std::size_t> out;
  out.reserve(n);
  if (pool.size() >= static_cast<std::size_t>(n)) {
    for (std::size_t k : rng.sample_indices(pool.size(), n))
      out.push_back(pool[k]);
  } else {
    for (int i = 0; i < n; ++i) out.push_back(pool[rng.below(pool.size())]);
  }
  return out;
}

}  // namespace stream_detail

// Materializes the stream as a flat image sequence (phase p occupies
// [p*N_p, (p+1)*N_p)). Incremental phases pool their classes' examples;
// uniform phases draw class-first so every class appears with equal
// probability regardless of dataset balance.
inline std::vector<Image> build_stream(const std::vector<Image>& dataset,
                                       const StreamSpec& spec) {
  spec.validate();
  const auto by = stream_detail::index_by_class(dataset);
  std::vector<Image> out;
  out.reserve(spec.phases.size() * static_cast<std::size_t>(spec.examples_per_phase));
  const std::vector<int> universe = spec.class_universe();
  for (std::size_t p = 0; p < spec.phases.size(); ++p) {
    Rng rng(derive_seed(spec.seed, "stream-phase", p));
    if (spec.mode == StreamMode::incremental) {
      for (std::size_t idx : stream_detail::draw_pooled(
               by, spec.phases[p], spec.examples_per_phase, rng))
        out.push_back(dataset[idx]);
    } else {
      for (int c : universe)
        if (!by.count(c))
          throw config_error("stream: class " + std::to_string(c) +
                             " absent from dataset");
      for (int i = 0; i < spec.examples_per_phase; ++i) {
        const int c = universe[rng.below(universe.size())];
        const auto& pool = by.at(c);
        out.push_back(dataset[pool[rng.below(pool.size())]]);
      }
    }
  }
  return out;
}

namespace stream_detail {

// Shared per-class permutation so that labeled (front) and test (back) draws
// from the same dataset+seed never overlap.
inline std::vector<std::size_t> class_perm(
    const std::map<int, std::vector<std::size_t>>& by, int cls,
    std::uint64_t seed) {
  auto it = by.find(cls);
  if (it == by.end())
    throw config_error("sample: class " + std::to_string(cls) +
                       " absent from dataset");
  std::vector<std::size_t> perm = it->second;
  Rng rng(derive_seed(seed, "class-perm", static_cast<std::uint64_t>(cls)));
  rng.shuffle(perm);
  return perm;
}

inline LabeledSet sample_ends(const std::vector<Image>& dataset,
                              const std::vector<int>& classes, int per_class,
                              std::uint64_t seed, bool from_front) {
  if (per_class <= 0) throw config_error("sample: per_class must be positive");
  const auto by = index_by_class(dataset);
  LabeledSet out;
  out.classes = classes;
  std::sort(out.classes.begin(), out.classes.end());
  out.classes.erase(std::unique(out.classes.begin(), out.classes.end()),
                    out.classes.end());
  for (int c : out.classes) {
    const auto perm = class_perm(by, c, seed);
    if (perm.size() < static_cast<std::size_t>(per_class))
      throw config_error("sample: class " + std::to_string(c) + " has " +
                         std::to_string(perm.size()) + " examples, need " +
                         std::to_string(per_class));
    for (int i = 0; i < per_class; ++i) {
      const std::size_t idx =
          from_front ? perm[i] : perm[perm.size() - 1 - i];
      out.examples.push_back(dataset[idx]);
    }
  }
  return out;
}

}  // namespace stream_detail

inline LabeledSet sample_labeled_set(const std::vector<Image>& dataset,
                                     const std::vector<int>& classes,
                                     int per_class, std::uint64_t seed) {
  return stream_detail::sample_ends(dataset, classes, per_class, seed, true);
}

// Disjoint from sample_labeled_set for the same (dataset, seed) as long as
// labeled_per_class + test_per_class <= class pool size.
inline LabeledSet sample_test_set(const std::vector<Image>& dataset,
                                  const std::vector<int>& classes,
                                  int per_class, std::uint64_t seed) {
  return stream_detail::sample_ends(dataset, classes, per_class, seed, false);
}

}  // namespace stam
