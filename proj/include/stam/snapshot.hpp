#pragma once

// Versioned binary snapshots. Layout (all little-endian, f64 = raw IEEE-754
// bits, so round-trips are lossless): 8-byte magic "STAMSNAP", u32 version,
// u8 kind, then the kind-specific payload. Full layout in docs/snapshot_format.md.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/hierarchy.hpp"

namespace stam {

constexpr std::uint32_t kSnapshotVersion = 1;
constexpr std::uint8_t kSnapshotHierarchy = 1;
constexpr std::uint8_t kSnapshotPca = 2;
inline constexpr char kSnapshotMagic[8] = {'S', 'T', 'A', 'M',
                                           'S', 'N', 'A', 'P'};

namespace snap_detail {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> buf) : buf_(std::move(buf)) {}
  std::uint8_t u8() {
    need(1);
    return buf_[off_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf_[off_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf_[off_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  bool exhausted() const { return off_ == buf_.size(); }

 private:
  void need(std::size_t n) {
    if (off_ + n > buf_.size()) throw data_error("snapshot: truncated");
  }
  std::vector<std::uint8_t> buf_;
  std::size_t off_ = 0;
};

inline void write_file(const std::filesystem::path& p,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("snapshot: cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("snapshot: short write " + p.string());
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw data_error("snapshot: cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_header(Writer& w, std::uint8_t kind) {
  for (char c : kSnapshotMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kSnapshotVersion);
  w.u8(kind);
}

inline std::uint8_t read_header(Reader& r) {
  for (char c : kSnapshotMagic)
    if (r.u8() != static_cast<std::uint8_t>(c))
      throw data_error("snapshot: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kSnapshotVersion)
    throw data_error("snapshot: unsupported version " + std::to_string(version));
  return r.u8();
}

inline void put_centroids(Writer& w, const std::vector<Centroid>& pool) {
  w.u32(static_cast<std::uint32_t>(pool.size()));
  for (const Centroid& c : pool) {
    w.u64(c.select_count);
    w.u64(c.last_selected);
    w.f64s(c.values);
  }
}

inline std::vector<Centroid> get_centroids(Reader& r, std::size_t dim) {
  std::vector<Centroid> pool(r.u32());
  for (Centroid& c : pool) {
    c.select_count = r.u64();
    c.last_selected = r.u64();
    c.values = r.f64s(dim);
  }
  return pool;
}

}  // namespace snap_detail

inline std::vector<std::uint8_t> serialize_hierarchy(const Hierarchy& h) {
  snap_detail::Writer w;
  snap_detail::write_header(w, kSnapshotHierarchy);
  const Hierarchy::State s = h.to_state();
  w.u8(s.flags.ltm_disabled ? 1 : 0);
  w.u8(s.flags.ltm_dynamic ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(s.flags.drop_layers.size()));
  for (int id : s.flags.drop_layers) w.u32(static_cast<std::uint32_t>(id));
  w.u64(s.images);
  w.u8(s.initialized ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(s.layers.size()));
  for (const auto& l : s.layers) {
    w.u32(static_cast<std::uint32_t>(l.cfg.rho));
    w.u32(static_cast<std::uint32_t>(l.cfg.stm_capacity));
    w.f64(l.cfg.alpha);
    w.f64(l.cfg.theta);
    w.f64(l.cfg.beta);
    w.u32(static_cast<std::uint32_t>(l.cfg.stride));
    w.u8(static_cast<std::uint8_t>(l.cfg.metric));
    w.u32(static_cast<std::uint32_t>(l.cfg.novelty_window));
    w.u32(static_cast<std::uint32_t>(l.cfg.novelty_warmup));
    w.u64(l.clock);
    w.f64(l.dist_sum);
    w.u64(l.dist_count);
    w.u32(static_cast<std::uint32_t>(l.ring.size()));
    w.f64s(l.ring);
    snap_detail::put_centroids(w, l.stm);
    snap_detail::put_centroids(w, l.ltm);
  }
  return w.bytes();
}

inline Hierarchy deserialize_hierarchy(const std::vector<std::uint8_t>& bytes) {
  snap_detail::Reader r(bytes);
  if (snap_detail::read_header(r) != kSnapshotHierarchy)
    throw data_error("snapshot: not a hierarchy snapshot");
  Hierarchy::State s;
  s.flags.ltm_disabled = r.u8() != 0;
  s.flags.ltm_dynamic = r.u8() != 0;
  const std::uint32_t ndrop = r.u32();
  for (std::uint32_t i = 0; i < ndrop; ++i)
    s.flags.drop_layers.push_back(static_cast<int>(r.u32()));
  s.images = r.u64();
  s.initialized = r.u8() != 0;
  const std::uint32_t nl = r.u32();
  for (std::uint32_t i = 0; i < nl; ++i) {
    LayerMemory::State l;
    l.cfg.rho = static_cast<int>(r.u32());
    l.cfg.stm_capacity = static_cast<int>(r.u32());
    l.cfg.alpha = r.f64();
    l.cfg.theta = r.f64();
    l.cfg.beta = r.f64();
    l.cfg.stride = static_cast<int>(r.u32());
    l.cfg.metric = static_cast<Metric>(r.u8());
    l.cfg.novelty_window = static_cast<int>(r.u32());
    l.cfg.novelty_warmup = static_cast<int>(r.u32());
    l.clock = r.u64();
    l.dist_sum = r.f64();
    l.dist_count = r.u64();
    l.ring = r.f64s(r.u32());
    l.stm = snap_detail::get_centroids(r, l.cfg.dim());
    l.ltm = snap_detail::get_centroids(r, l.cfg.dim());
    s.layers.push_back(std::move(l));
  }
  // active flags are derivable from drop_layers; recompute via from_state.
  s.active.assign(nl, 1);
  for (int id : s.flags.drop_layers)
    if (id >= 1 && static_cast<std::uint32_t>(id) <= nl) s.active[id - 1] = 0;
  if (!r.exhausted()) throw data_error("snapshot: trailing bytes");
  return Hierarchy::from_state(std::move(s));
}

inline void save_hierarchy(const std::filesystem::path& p, const Hierarchy& h) {
  snap_detail::write_file(p, serialize_hierarchy(h));
}

inline Hierarchy load_hierarchy(const std::filesystem::path& p) {
  return deserialize_hierarchy(snap_detail::read_file(p));
}

}  // namespace stam
