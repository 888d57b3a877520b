#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/image.hpp"

namespace stam {

// One rho x rho window of an image, values row-major. `layer` is filled in by
// hierarchy code; extraction itself is layer-agnostic.
struct Patch {
  std::vector<double> values;
  int layer = -1;
  int row = 0;  // top-left corner
  int col = 0;
};

// Patches per axis for a given extent: (dim - rho) / stride + 1.
inline int patch_grid(int dim, int rho, int stride) {
  return (dim - rho) / stride + 1;
}

// All overlapping windows, row-major by top-left corner.
inline std::vector<Patch> extract_patches(const Image& im, int rho,
                                          int stride = 1) {
  if (rho < 1 || stride < 1)
    throw data_error("extract_patches: rho and stride must be positive");
  if (rho > im.height || rho > im.width)
    throw data_error("extract_patches: rho " + std::to_string(rho) +
                     " exceeds image " + std::to_string(im.height) + "x" +
                     std::to_string(im.width));
  const int nr = patch_grid(im.height, rho, stride);
  const int nc = patch_grid(im.width, rho, stride);
  std::vector<Patch> out;
  out.reserve(static_cast<std::size_t>(nr) * nc);
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) {
      Patch p;
      p.row = r * stride;
      p.col = c * stride;
      p.values.resize(static_cast<std::size_t>(rho) * rho);
      std::size_t k = 0;
      for (int i = 0; i < rho; ++i)
        for (int j = 0; j < rho; ++j)
          p.values[k++] = im.at(p.row + i, p.col + j);
      out.push_back(std::move(p));
    }
  }
  return out;
}

// Below this std the patch counts as constant and normalizes to all zeros.
constexpr double kNormalizeEps = 1e-8;

// Zero mean, unit variance (population std, i.e. divide by n).
inline void normalize_patch(std::vector<double>& v) {
  if (v.empty()) return;
  const std::size_t n = v.size();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : v) {
    const double d = x - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (sd < kNormalizeEps) {
    for (double& x : v) x = 0.0;
    return;
  }
  for (double& x : v) x = (x - mean) / sd;
}

inline Patch normalize_patch(Patch p) {
  normalize_patch(p.values);
  return p;
}

}  // namespace stam
