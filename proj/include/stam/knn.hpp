#pragma once

// Brute-force K-nearest-neighbors with pinned tie rules: neighbor order is
// (distance, index) lexicographic; the vote winner on a count tie is the
// lowest class id.

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stam/errors.hpp"

namespace stam {

inline int knn_classify(const std::vector<std::vector<double>>& train,
                        const std::vector<int>& labels,
                        std::span<const double> query, int k) {
  if (train.empty()) throw config_error("knn: empty training set");
  if (train.size() != labels.size())
    throw config_error("knn: points/labels length mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > train.size())
    throw config_error("knn: k " + std::to_string(k) + " invalid for " +
                       std::to_string(train.size()) + " points");
  std::vector<std::pair<double, std::size_t>> order(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].size() != query.size())
      throw config_error("knn: dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double d = query[j] - train[i][j];
      s += d * d;
    }
    order[i] = {s, i};
  }
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  std::map<int, int> votes;
  for (int i = 0; i < k; ++i) ++votes[labels[order[i].second]];
  int best_label = -1, best_count = -1;
  for (const auto& [label, count] : votes) {
    if (count > best_count) {  // map order ascending => ties keep lowest id
      best_count = count;
      best_label = label;
    }
  }
  return best_label;
}

}  // namespace stam
