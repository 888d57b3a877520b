#pragma once

// Deterministic synthetic digit dataset: 10 classes of 28x28 grayscale
// images. Each digit is a fixed stroke skeleton (polylines/arcs in a unit
// box) rendered with class-conditioned style priors (stroke width, slant,
// aspect) plus a random affine jitter (rotation, anisotropic scale, shear,
// translation), random ink, and ink-only pixel noise (the background stays
// exactly zero, like scanned digits). Classes overlap enough to make
// the task non-trivial while staying learnable. Used where the canonical
// handwritten sets are not on disk; everything downstream consumes the same
// IDX files either way.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "stam/image.hpp"
#include "stam/rng.hpp"

namespace stam {

namespace synth_detail {

using Pt = std::pair<double, double>;
using Poly = std::vector<Pt>;

inline Poly arc(double cx, double cy, double rx, double ry, double a0,
                double a1, int n = 14) {
  Poly out;
  for (int i = 0; i <= n; ++i) {
    const double t = a0 + (a1 - a0) * i / n;
    out.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return out;
}

// Skeletons in [0,1]^2, y growing downward.
inline const std::vector<std::vector<Poly>>& skeletons() {
  static const double pi = 3.14159265358979323846;
  static const std::vector<std::vector<Poly>> s = {
      // 0
      {arc(0.50, 0.50, 0.26, 0.40, 0, 2 * pi, 28)},
      // 1
      {{{0.34, 0.22}, {0.54, 0.06}, {0.54, 0.94}}},
      // 2
      {arc(0.50, 0.28, 0.26, 0.20, pi, 2 * pi + 0.45),
       {{0.70, 0.40}, {0.26, 0.90}},
       {{0.26, 0.90}, {0.78, 0.90}}},
      // 3
      {arc(0.48, 0.28, 0.24, 0.20, -pi * 0.75, pi * 0.5),
       arc(0.48, 0.71, 0.26, 0.23, -pi * 0.5, pi * 0.80)},
      // 4
      {{{0.62, 0.06}, {0.20, 0.62}},
       {{0.20, 0.62}, {0.84, 0.62}},
       {{0.64, 0.34}, {0.64, 0.94}}},
      // 5
      {{{0.74, 0.08}, {0.32, 0.08}},
       {{0.32, 0.08}, {0.29, 0.44}},
       arc(0.50, 0.66, 0.26, 0.24, -pi * 0.60, pi * 0.70)},
      // 6
      {{{0.64, 0.06}, {0.40, 0.46}},
       arc(0.51, 0.66, 0.24, 0.26, 0, 2 * pi, 24)},
      // 7
      {{{0.24, 0.08}, {0.80, 0.08}}, {{0.80, 0.08}, {0.44, 0.94}}},
      // 8
      {arc(0.50, 0.29, 0.20, 0.19, 0, 2 * pi, 22),
       arc(0.50, 0.71, 0.24, 0.22, 0, 2 * pi, 22)},
      // 9
      {arc(0.48, 0.33, 0.23, 0.24, 0, 2 * pi, 22),
       {{0.71, 0.40}, {0.58, 0.94}}},
  };
  return s;
}

inline double seg_dist(double px, double py, const Pt& a, const Pt& b) {
  const double vx = b.first - a.first, vy = b.second - a.second;
  const double wx = px - a.first, wy = py - a.second;
  const double vv = vx * vx + vy * vy;
  double t = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0;
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  const double dx = px - (a.first + t * vx), dy = py - (a.second + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace synth_detail

inline Image render_synthetic_digit(int digit, Rng& rng, int size = 28) {
  using namespace synth_detail;
  const auto& skel = skeletons().at(digit);

  // Per-class style priors. Handwritten sets differ systematically in stroke
  // width, slant and aspect across symbols (on top of per-writer variation),
  // so each class carries its own micro-texture, not just its own shape.
  const double style = ((digit * 3 + 1) % 10) / 9.0;
  const double slant0 = (((digit * 7 + 2) % 10) / 9.0 - 0.5) * 0.22;
  const double aspect0 = (((digit * 9 + 4) % 10) / 9.0 - 0.5) * 0.18;

  // Jitter: the glyph nominally spans ~16px inside the canvas.
  const double rot = (rng.unit() * 2 - 1) * 0.26;
  const double sx = 0.80 + aspect0 + rng.unit() * 0.34;
  const double sy = 0.80 - aspect0 + rng.unit() * 0.34;
  const double shear = slant0 + (rng.unit() * 2 - 1) * 0.11;
  const double tx = (rng.unit() * 2 - 1) * 2.6;
  const double ty = (rng.unit() * 2 - 1) * 2.6;
  const double half = 0.30 * size;  // glyph half-extent in px
  const double cx = size / 2.0, cy = size / 2.0;
  const double cr = std::cos(rot), sr = std::sin(rot);
  auto map = [&](const Pt& p) -> Pt {
    double x = (p.first - 0.5) * 2 * half * sx;
    double y = (p.second - 0.5) * 2 * half * sy;
    x += shear * y;
    const double xr = cr * x - sr * y, yr = sr * x + cr * y;
    return {cx + xr + tx, cy + yr + ty};
  };

  std::vector<std::pair<Pt, Pt>> segs;
  for (const Poly& poly : skel)
    for (std::size_t i = 0; i + 1 < poly.size(); ++i)
      segs.push_back({map(poly[i]), map(poly[i + 1])});

  const double radius = 0.50 + 0.42 * style + rng.unit() * 0.45;  // half-width
  const double feather = 0.9;                         // soft edge width, px
  const double ink = 0.72 + rng.unit() * 0.28;

  Image im;
  im.height = size;
  im.width = size;
  im.label = digit;
  im.pixels.assign(static_cast<std::size_t>(size) * size, 0.0);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double d = 1e9;
      for (const auto& [a, b] : segs)
        d = std::min(d, seg_dist(c + 0.5, r + 0.5, a, b));
      double v = 0.0;
      if (d <= radius) v = 1.0;
      else if (d < radius + feather) v = 1.0 - (d - radius) / feather;
      // Ink-only noise: background stays exactly zero, like scanned digits.
      if (v > 0.0) v = v * ink + rng.normal() * 0.035;
      im.at(r, c) = v < 0 ? 0 : (v > 1 ? 1 : v);
    }
  }
  return im;
}

// per_class images of each digit 0..9, in class-major order. Each image gets
// its own derived seed, so any subset is reproducible.
inline std::vector<Image> make_synthetic_digits(int per_class,
                                                std::uint64_t seed,
                                                int size = 28) {
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(per_class) * 10);
  for (int digit = 0; digit < 10; ++digit) {
    for (int i = 0; i < per_class; ++i) {
      Rng rng(derive_seed(seed, "synth-digit", digit, i));
      out.push_back(render_synthetic_digit(digit, rng, size));
    }
  }
  return out;
}

}  // namespace stam
