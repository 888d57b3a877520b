#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "stam/errors.hpp"
#include "stam/hierarchy.hpp"
#include "stam/snapshot.hpp"

namespace {

stam::Hierarchy worked_hierarchy(std::uint64_t seed,
                                 stam::AblationFlags flags = {}) {
  std::vector<stam::LayerConfig> cfgs(2);
  cfgs[0].rho = 2;
  cfgs[1].rho = 3;
  for (auto& c : cfgs) {
    c.stm_capacity = 6;
    c.theta = 3.0;
    c.novelty_window = 40;
    c.novelty_warmup = 5;
  }
  stam::Hierarchy h(cfgs, std::move(flags));
  stam::Rng rng(seed);
  std::vector<stam::Image> images;
  for (int i = 0; i < 30; ++i)
    images.push_back(testutil::random_image(rng, 8, 8));
  h.init_from_images(std::span<const stam::Image>(images.data(), 2), seed);
  for (int i = 2; i < 30; ++i) h.process_image(images[i]);
  return h;
}

}  // namespace

TEST_CASE("hierarchy snapshot round-trips byte-for-byte") {
  auto h = worked_hierarchy(5);
  const auto bytes = stam::serialize_hierarchy(h);
  auto back = stam::deserialize_hierarchy(bytes);
  REQUIRE(stam::serialize_hierarchy(back) == bytes);
  REQUIRE(back.images_processed() == h.images_processed());
  REQUIRE(back.num_layers() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    REQUIRE(back.layer(l).event_clock() == h.layer(l).event_clock());
    REQUIRE(back.layer(l).dbar() == h.layer(l).dbar());
    REQUIRE(back.layer(l).novelty_threshold() == h.layer(l).novelty_threshold());
    REQUIRE(back.layer(l).stm().size() == h.layer(l).stm().size());
    REQUIRE(back.layer(l).ltm().size() == h.layer(l).ltm().size());
  }
}

TEST_CASE("a restored hierarchy continues identically") {
  auto a = worked_hierarchy(6);
  auto b = stam::deserialize_hierarchy(stam::serialize_hierarchy(a));
  stam::Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    const auto im = testutil::random_image(rng, 8, 8);
    a.process_image(im);
    b.process_image(im);
  }
  REQUIRE(stam::serialize_hierarchy(a) == stam::serialize_hierarchy(b));
}

TEST_CASE("ablation flags survive the round-trip") {
  stam::AblationFlags f;
  f.ltm_disabled = true;
  f.drop_layers = {2};
  auto h = worked_hierarchy(7, f);
  auto back = stam::deserialize_hierarchy(stam::serialize_hierarchy(h));
  REQUIRE(back.flags().ltm_disabled);
  REQUIRE_FALSE(back.flags().ltm_dynamic);
  REQUIRE(back.flags().drop_layers == std::vector<int>{2});
  REQUIRE_FALSE(back.layer_active(1));
  REQUIRE(back.eval_tier() == stam::SearchTier::stm_only);
}

TEST_CASE("snapshot files save and load") {
  testutil::TempDir dir("snap");
  auto h = worked_hierarchy(8);
  const auto p = dir.file("h.snap");
  stam::save_hierarchy(p, h);
  auto back = stam::load_hierarchy(p);
  REQUIRE(stam::serialize_hierarchy(back) == stam::serialize_hierarchy(h));
  REQUIRE_THROWS_AS(stam::load_hierarchy(dir.file("missing.snap")),
                    stam::data_error);
}

TEST_CASE("corrupt snapshots are rejected") {
  auto h = worked_hierarchy(9);
  auto bytes = stam::serialize_hierarchy(h);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  REQUIRE_THROWS_AS(stam::deserialize_hierarchy(bad_magic), stam::data_error);

  auto bad_version = bytes;
  bad_version[8] = 0xEE;
  REQUIRE_THROWS_AS(stam::deserialize_hierarchy(bad_version), stam::data_error);

  auto bad_kind = bytes;
  bad_kind[12] = stam::kSnapshotPca;
  REQUIRE_THROWS_AS(stam::deserialize_hierarchy(bad_kind), stam::data_error);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 7);
  REQUIRE_THROWS_AS(stam::deserialize_hierarchy(truncated), stam::data_error);

  auto trailing = bytes;
  trailing.push_back(0);
  REQUIRE_THROWS_AS(stam::deserialize_hierarchy(trailing), stam::data_error);
}
