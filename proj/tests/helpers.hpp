#pragma once

// Shared test utilities: tiny images, random layer states, temp dirs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stam/hierarchy.hpp"
#include "stam/image.hpp"
#include "stam/layer.hpp"
#include "stam/rng.hpp"

namespace testutil {

inline std::vector<double> random_vec(stam::Rng& rng, std::size_t n,
                                      double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + rng.unit() * (hi - lo);
  return v;
}

inline stam::Image random_image(stam::Rng& rng, int h, int w, int label = -1) {
  stam::Image im;
  im.height = h;
  im.width = w;
  im.label = label;
  im.pixels.resize(static_cast<std::size_t>(h) * w);
  for (auto& p : im.pixels) p = rng.unit();
  return im;
}

// Image whose label is encoded and whose pixels carry a unique id, handy for
// stream bookkeeping tests.
inline stam::Image tagged_image(int label, int id) {
  stam::Image im;
  im.height = 1;
  im.width = 1;
  im.label = label;
  im.pixels = {static_cast<double>(id)};
  return im;
}

// Layer with random pools built through from_state (full control over
// contents without streaming).
inline stam::LayerMemory random_layer(stam::Rng& rng, int rho, int n_stm,
                                      int n_ltm,
                                      stam::Metric m = stam::Metric::euclidean) {
  stam::LayerMemory::State s;
  s.cfg.rho = rho;
  s.cfg.stm_capacity = std::max(n_stm, 1);
  s.cfg.metric = m;
  const std::size_t dim = s.cfg.dim();
  for (int i = 0; i < n_stm; ++i) {
    stam::Centroid c;
    c.values = random_vec(rng, dim);
    s.stm.push_back(std::move(c));
  }
  for (int i = 0; i < n_ltm; ++i) {
    stam::Centroid c;
    c.values = random_vec(rng, dim);
    s.ltm.push_back(std::move(c));
  }
  s.dist_sum = 10.0;
  s.dist_count = 10;
  return stam::LayerMemory::from_state(std::move(s));
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("stam_test_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const {
    return path_ / name;
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p,
                        const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline void write_text(const std::filesystem::path& p,
                       const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace testutil
