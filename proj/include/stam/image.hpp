#pragma once

#include <string>
#include <vector>

#include "stam/errors.hpp"

namespace stam {

// Grayscale image, pixels row-major in [0,1]. `label` is carried for
// evaluation only; stream processing never reads it.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;
  int label = -1;

  double at(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * width + c];
  }
  double& at(int r, int c) {
    return pixels[static_cast<std::size_t>(r) * width + c];
  }
};

// Interleaved multi-channel image (RGB when channels == 3).
struct RgbImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;  // h*w*channels, interleaved
  int label = -1;
};

// BT.601 luma conversion: 0.299 R + 0.587 G + 0.114 B.
inline Image to_grayscale(const RgbImage& rgb) {
  if (rgb.channels != 3)
    throw data_error("to_grayscale: expected 3 channels, got " +
                     std::to_string(rgb.channels));
  const std::size_t n =
      static_cast<std::size_t>(rgb.height) * rgb.width;
  if (rgb.pixels.size() != n * 3)
    throw data_error("to_grayscale: pixel buffer size mismatch");
  Image out;
  out.height = rgb.height;
  out.width = rgb.width;
  out.label = rgb.label;
  out.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.pixels[i] = 0.299 * rgb.pixels[3 * i] + 0.587 * rgb.pixels[3 * i + 1] +
                    0.114 * rgb.pixels[3 * i + 2];
  }
  return out;
}

}  // namespace stam
