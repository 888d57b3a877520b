#pragma once

// IDX binary container (the MNIST/EMNIST on-disk layout): big-endian u32
// header words, then raw payload. Magic 0x803 = u8 images (count, rows, cols),
// 0x801 = u8 labels (count).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/image.hpp"

namespace stam {

namespace idx_detail {

inline std::uint32_t read_u32be(const std::vector<std::uint8_t>& raw,
                                std::size_t off) {
  return (std::uint32_t(raw[off]) << 24) | (std::uint32_t(raw[off + 1]) << 16) |
         (std::uint32_t(raw[off + 2]) << 8) | std::uint32_t(raw[off + 3]);
}

inline void write_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + p.string());
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  return raw;
}

inline void write_file(const std::filesystem::path& p,
                       const std::vector<std::uint8_t>& raw) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write file: " + p.string());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw data_error("short write: " + p.string());
}

}  // namespace idx_detail

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Pixels are scaled from u8 to [0,1]. Labels stay -1 (attach separately).
inline std::vector<Image> parse_idx_images(const std::vector<std::uint8_t>& raw) {
  if (raw.size() < 16) throw data_error("idx images: truncated header");
  const std::uint32_t magic = idx_detail::read_u32be(raw, 0);
  if (magic != kIdxImageMagic)
    throw data_error("idx images: bad magic " + std::to_string(magic));
  const std::uint32_t count = idx_detail::read_u32be(raw, 4);
  const std::uint32_t rows = idx_detail::read_u32be(raw, 8);
  const std::uint32_t cols = idx_detail::read_u32be(raw, 12);
  const std::size_t need =
      16 + std::size_t(count) * rows * cols;
  if (raw.size() < need) throw data_error("idx images: truncated payload");
  std::vector<Image> out(count);
  std::size_t off = 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    Image& im = out[i];
    im.height = static_cast<int>(rows);
    im.width = static_cast<int>(cols);
    im.pixels.resize(std::size_t(rows) * cols);
    for (std::size_t j = 0; j < im.pixels.size(); ++j)
      im.pixels[j] = raw[off + j] / 255.0;
    off += std::size_t(rows) * cols;
  }
  return out;
}

inline std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& raw) {
  if (raw.size() < 8) throw data_error("idx labels: truncated header");
  const std::uint32_t magic = idx_detail::read_u32be(raw, 0);
  if (magic != kIdxLabelMagic)
    throw data_error("idx labels: bad magic " + std::to_string(magic));
  const std::uint32_t count = idx_detail::read_u32be(raw, 4);
  if (raw.size() < 8 + std::size_t(count))
    throw data_error("idx labels: truncated payload");
  std::vector<int> out(count);
  for (std::uint32_t i = 0; i < count; ++i) out[i] = raw[8 + i];
  return out;
}

inline std::vector<Image> load_idx_images(const std::filesystem::path& p) {
  return parse_idx_images(idx_detail::read_file(p));
}

inline std::vector<int> load_idx_labels(const std::filesystem::path& p) {
  return parse_idx_labels(idx_detail::read_file(p));
}

// Loads an image/label file pair and attaches labels.
inline std::vector<Image> load_idx_dataset(const std::filesystem::path& images,
                                           const std::filesystem::path& labels) {
  std::vector<Image> ims = load_idx_images(images);
  std::vector<int> lbs = load_idx_labels(labels);
  if (ims.size() != lbs.size())
    throw data_error("idx dataset: " + std::to_string(ims.size()) +
                     " images vs " + std::to_string(lbs.size()) + " labels");
  for (std::size_t i = 0; i < ims.size(); ++i) ims[i].label = lbs[i];
  return ims;
}

// Writers (used by the synthetic dataset tool and tests). Pixels are clamped
// to [0,1] and quantized to u8.
inline void write_idx_images(const std::filesystem::path& p,
                             const std::vector<Image>& images) {
  std::vector<std::uint8_t> raw;
  const int rows = images.empty() ? 0 : images[0].height;
  const int cols = images.empty() ? 0 : images[0].width;
  idx_detail::write_u32be(raw, kIdxImageMagic);
  idx_detail::write_u32be(raw, static_cast<std::uint32_t>(images.size()));
  idx_detail::write_u32be(raw, static_cast<std::uint32_t>(rows));
  idx_detail::write_u32be(raw, static_cast<std::uint32_t>(cols));
  for (const Image& im : images) {
    if (im.height != rows || im.width != cols)
      throw data_error("write_idx_images: mixed image shapes");
    for (double v : im.pixels) {
      double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      raw.push_back(static_cast<std::uint8_t>(c * 255.0 + 0.5));
    }
  }
  idx_detail::write_file(p, raw);
}

inline void write_idx_labels(const std::filesystem::path& p,
                             const std::vector<int>& labels) {
  std::vector<std::uint8_t> raw;
  idx_detail::write_u32be(raw, kIdxLabelMagic);
  idx_detail::write_u32be(raw, static_cast<std::uint32_t>(labels.size()));
  for (int v : labels) {
    if (v < 0 || v > 255) throw data_error("write_idx_labels: label out of range");
    raw.push_back(static_cast<std::uint8_t>(v));
  }
  idx_detail::write_file(p, raw);
}

}  // namespace stam
