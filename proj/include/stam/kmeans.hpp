#pragma once

// Offline k-means for embedding-space clustering: k-means++ seeding, Lloyd
// iterations, multiple restarts keeping the lowest inertia. Deterministic for
// a given seed (own RNG, sequential restarts, lowest-index tie-breaks).

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/rng.hpp"

namespace stam {

struct KmeansResult {
  std::vector<int> assignment;                 // cluster per point
  std::vector<std::vector<double>> centroids;  // k x dim
  double inertia = 0.0;                        // sum of squared distances
  int iterations = 0;
};

namespace kmeans_detail {

inline double sq_dist(const std::vector<double>& a,
                      const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline KmeansResult run_once(const std::vector<std::vector<double>>& pts,
                             int k, std::uint64_t seed, int max_iter) {
  const std::size_t n = pts.size();
  Rng rng(seed);
  KmeansResult res;
  // k-means++: first center uniform, then proportional to squared distance
  // to the nearest chosen center.
  res.centroids.push_back(pts[rng.below(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts[i], res.centroids[0]);
  while (static_cast<int>(res.centroids.size()) < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick;
    if (total > 0.0) {
      const double r = rng.unit() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);  // all points coincide with chosen centers
    }
    res.centroids.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = sq_dist(pts[i], res.centroids.back());
      if (v < d2[i]) d2[i] = v;
    }
  }

  const std::size_t dim = pts[0].size();
  res.assignment.assign(n, -1);
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(pts[i], res.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double v = sq_dist(pts[i], res.centroids[c]);
        if (v < bd) {  // ties keep the lowest cluster index
          bd = v;
          best = c;
        }
      }
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed && res.iterations > 0) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = res.assignment[i];
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += pts[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < dim; ++j)
        res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }
  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    res.inertia += sq_dist(pts[i], res.centroids[res.assignment[i]]);
  return res;
}

}  // namespace kmeans_detail

inline KmeansResult kmeans(const std::vector<std::vector<double>>& points,
                           int k, std::uint64_t seed, int restarts = 10,
                           int max_iter = 300) {
  if (k < 1) throw config_error("kmeans: k must be >= 1");
  if (points.empty()) throw config_error("kmeans: no points");
  if (static_cast<std::size_t>(k) > points.size())
    throw config_error("kmeans: k " + std::to_string(k) + " exceeds " +
                       std::to_string(points.size()) + " points");
  if (restarts < 1) throw config_error("kmeans: restarts must be >= 1");
  for (const auto& p : points)
    if (p.size() != points[0].size())
      throw config_error("kmeans: ragged points");
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KmeansResult res = kmeans_detail::run_once(
        points, k, derive_seed(seed, "kmeans-restart", r), max_iter);
    if (res.inertia < best.inertia) best = std::move(res);  // tie: first wins
  }
  return best;
}

// Majority-class purity: each cluster takes its most frequent true label
// (ties toward the lowest label), accuracy is the fraction covered.
inline double cluster_accuracy(const std::vector<int>& assignment,
                               const std::vector<int>& labels) {
  if (assignment.size() != labels.size())
    throw eval_error("cluster_accuracy: length mismatch");
  if (assignment.empty()) return 0.0;
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    ++counts[assignment[i]][labels[i]];
  std::size_t hit = 0;
  for (const auto& [cluster, by_label] : counts) {
    std::size_t best = 0;
    for (const auto& [label, n] : by_label)
      if (n > best) best = n;  // map order = ascending label, ties keep lowest
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(assignment.size());
}

}  // namespace stam
