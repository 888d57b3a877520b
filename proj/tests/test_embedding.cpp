#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "stam/embedding.hpp"
#include "stam/errors.hpp"

namespace {

stam::Hierarchy planted(std::vector<std::vector<double>> ltm,
                        std::uint64_t dist_count = 4) {
  stam::LayerMemory::State ls;
  ls.cfg.rho = 2;
  ls.cfg.stm_capacity = 1;
  stam::Centroid filler;
  filler.values.assign(4, 1000.0);
  ls.stm = {filler};
  for (auto& v : ltm) {
    stam::Centroid c;
    c.values = std::move(v);
    ls.ltm.push_back(std::move(c));
  }
  ls.dist_sum = static_cast<double>(dist_count);  // dbar = 1 when count > 0
  ls.dist_count = dist_count;
  stam::Hierarchy::State hs;
  hs.active = {1};
  hs.layers = {std::move(ls)};
  hs.initialized = true;
  return stam::Hierarchy::from_state(std::move(hs));
}

stam::Hierarchy worked(std::uint64_t seed) {
  std::vector<stam::LayerConfig> cfgs(2);
  cfgs[0].rho = 2;
  cfgs[1].rho = 3;
  for (auto& c : cfgs) {
    c.stm_capacity = 6;
    c.theta = 1.0;
    c.novelty_window = 40;
    c.novelty_warmup = 5;
  }
  stam::Hierarchy h(cfgs);
  stam::Rng rng(seed);
  std::vector<stam::Image> images;
  for (int i = 0; i < 40; ++i)
    images.push_back(testutil::random_image(rng, 7, 7));
  h.init_from_images(std::span<const stam::Image>(images.data(), 2), seed);
  for (int i = 2; i < 40; ++i) h.process_image(images[i]);
  return h;
}

}  // namespace

TEST_CASE("embedding coordinates are exp of minus the best match") {
  auto h = planted({{-1.0, -1.0, 1.0, 1.0}, {-1.0, 1.0, 1.0, -1.0}});
  stam::Image im;
  im.height = 2;
  im.width = 2;
  im.pixels = {0.0, 0.0, 1.0, 1.0};  // single patch, normalizes onto ltm[0]
  const auto e = stam::embed(h, im);
  REQUIRE(e.values.size() == 2);
  REQUIRE(e.values[0] == 1.0);  // distance 0
  REQUIRE(e.values[1] == Catch::Approx(std::exp(-std::sqrt(8.0))));
  REQUIRE(e.index_map[0] == std::make_pair(0, std::size_t{0}));
  REQUIRE(e.index_map[1] == std::make_pair(0, std::size_t{1}));
}

TEST_CASE("embedding min runs over all patches") {
  auto h = planted({{-1.0, -1.0, 1.0, 1.0}});
  stam::Image im;  // patch (0,1) matches exactly; patch (0,0) does not
  im.height = 2;
  im.width = 3;
  im.pixels = {0.5, 0.0, 0.0, 0.5, 1.0, 1.0};
  const auto e = stam::embed(h, im);
  REQUIRE(e.values.size() == 1);
  REQUIRE(e.values[0] == 1.0);
}

TEST_CASE("embedding matches the brute-force oracle exactly") {
  stam::Rng rng(404);
  for (int t = 0; t < 30; ++t) {
    auto h = worked(2000 + t);
    for (int i = 0; i < 4; ++i) {
      const auto im = testutil::random_image(rng, 7, 7);
      const auto got = stam::embed(h, im);
      const auto want = oracle::embedding(h, im);
      REQUIRE(got.values == want);
    }
  }
}

TEST_CASE("embedding values live in (0, 1]") {
  auto h = worked(55);
  stam::Rng rng(56);
  for (int t = 0; t < 10; ++t) {
    const auto e = stam::embed(h, testutil::random_image(rng, 7, 7));
    REQUIRE_FALSE(e.values.empty());
    for (double v : e.values) {
      REQUIRE(v > 0.0);
      REQUIRE(v <= 1.0);
    }
  }
}

TEST_CASE("index map walks layers then pool indices in order") {
  auto h = worked(57);
  stam::Rng rng(58);
  const auto e = stam::embed(h, testutil::random_image(rng, 7, 7));
  const std::size_t n0 = h.layer(0).ltm().size();
  const std::size_t n1 = h.layer(1).ltm().size();
  REQUIRE(e.values.size() == n0 + n1);
  for (std::size_t i = 0; i < n0; ++i)
    REQUIRE(e.index_map[i] == std::make_pair(0, i));
  for (std::size_t i = 0; i < n1; ++i)
    REQUIRE(e.index_map[n0 + i] == std::make_pair(1, i));
}

TEST_CASE("embedding precondition failures") {
  stam::Image im;
  im.height = 2;
  im.width = 2;
  im.pixels = {0.0, 0.0, 1.0, 1.0};
  auto no_stream = planted({{-1.0, -1.0, 1.0, 1.0}}, 0);  // dbar undefined
  REQUIRE_THROWS_AS(stam::embed(no_stream, im), stam::state_error);
  auto no_pool = planted({});
  REQUIRE_THROWS_AS(stam::embed(no_pool, im), stam::state_error);
}

TEST_CASE("embedding CSV has ids, labels and fixed-precision coordinates") {
  testutil::TempDir dir("emb");
  auto h = planted({{-1.0, -1.0, 1.0, 1.0}, {-1.0, 1.0, 1.0, -1.0}});
  stam::Image im;
  im.height = 2;
  im.width = 2;
  im.pixels = {0.0, 0.0, 1.0, 1.0};
  const auto e = stam::embed(h, im);
  const auto p = dir.file("emb.csv");
  stam::write_embeddings_csv(p, {7}, {3}, {e});
  const auto text = testutil::read_file(p);
  REQUIRE(text.substr(0, text.find('\n')) == "image_id,label,l1_c0,l1_c1");
  REQUIRE(text.find("\n7,3,1.000000000,") != std::string::npos);

  REQUIRE_THROWS_AS(stam::write_embeddings_csv(p, {}, {}, {}),
                    stam::eval_error);
  REQUIRE_THROWS_AS(stam::write_embeddings_csv(p, {1, 2}, {0}, {e}),
                    stam::eval_error);
}
